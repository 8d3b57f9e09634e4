use crate::ingest::{PartyId, PartyRegistry, Poll};
use crate::poe::PoEResult;

use super::svg::{percent, Svg};
use super::{date_label, Frame, Provenance, SvgDocument, Theme};

/// The usual newspaper chart: one bar per party, no uncertainty at all.
pub fn render_classic_bars(poll: &Poll, registry: &PartyRegistry, prov: &Provenance, theme: &Theme) -> SvgDocument {
    let title = format!("{} ({}), n = {}", poll.pollster, date_label(poll.publish_date), poll.sample_size);
    let mut svg = Svg::new(&title, prov, theme);
    let frame = Frame::inset(theme, 50.0, 40.0, 20.0, 50.0);
    let text = theme.text.to_string();
    svg.text("title", frame.left, 24.0, "start", &title, &text);

    let top_share = poll.shares.iter().cloned().fold(0.0, f64::max);
    let y_max = ((top_share * 10.0).ceil() / 10.0).max(0.1);
    for tick in 0..=(y_max * 10.0).round() as u32 {
        let v = f64::from(tick) / 10.0;
        let y = frame.y(v / y_max);
        svg.line("gridline", (frame.left, y), (frame.right(), y), "#e0e0e0", 1.0, None);
        svg.text("axis-label", frame.left - 6.0, y + 4.0, "end", &percent(v), &text);
    }

    let slot = frame.width / registry.len() as f64;
    svg.group("bars", None);
    for (i, (party, &share)) in registry.parties().iter().zip(&poll.shares).enumerate() {
        let x = frame.left + slot * (i as f64 + 0.15);
        let w = slot * 0.7;
        let top = frame.y(share / y_max);
        svg.rect("bar", x, top, w, frame.bottom() - top, &party.color.to_string(), &[("data-party", party.id.to_string())]);
        svg.text("bar-label", x + w / 2.0, top - 5.0, "middle", &percent(share), &text);
        svg.text("party-label", x + w / 2.0, frame.bottom() + 16.0, "middle", &party.name, &text);
    }
    svg.end_group();
    svg.line("axis", (frame.left, frame.bottom()), (frame.right(), frame.bottom()), &theme.axis.to_string(), 1.0, None);
    svg.finish()
}

/// One row of the PoE bar chart.
#[derive(Clone, Debug, PartialEq)]
pub struct PoeBar {
    pub label: String,
    pub result: PoEResult,
    /// Member with the highest posterior-mean share; sets the bar color.
    pub leader: PartyId,
}

/// Horizontal bars of coalition majority probabilities. The light-gray
/// segment from the base covers the draws in which a smaller part of the
/// coalition would already have had a majority.
pub fn render_poe_bars(bars: &[PoeBar], registry: &PartyRegistry, prov: &Provenance, theme: &Theme) -> SvgDocument {
    let title = "Probability of a seat majority";
    let mut svg = Svg::new(title, prov, theme);
    let frame = Frame::inset(theme, 170.0, 40.0, 60.0, 30.0);
    let text = theme.text.to_string();
    svg.text("title", 20.0, 24.0, "start", title, &text);

    for q in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let x = frame.x(q);
        svg.line("gridline", (x, frame.top), (x, frame.bottom()), "#e0e0e0", 1.0, None);
        svg.text("axis-label", x, frame.bottom() + 16.0, "middle", &percent(q), &text);
    }

    let row = frame.height / bars.len().max(1) as f64;
    let thickness = (row * 0.6).min(40.0);
    for (i, bar) in bars.iter().enumerate() {
        let y = frame.top + row * i as f64 + (row - thickness) / 2.0;
        let color = registry
            .index_of(bar.leader.as_str())
            .map_or_else(|| theme.axis.to_string(), |k| registry.party(k).color.to_string());
        let p = bar.result.probability.clamp(0.0, 1.0);
        svg.group("poe-row", None);
        svg.text("row-label", frame.left - 8.0, y + thickness / 2.0 + 4.0, "end", &bar.label, &text);
        svg.rect("track", frame.left, y, frame.width, thickness, "#f2f2f2", &[]);
        svg.rect("bar", frame.left, y, frame.x(p) - frame.left, thickness, &color, &[("data-p", format!("{:.6}", p))]);
        if let Some(sub) = bar.result.subset_probability.filter(|&s| s > 0.0) {
            let sub = sub.min(p);
            svg.rect("subset", frame.left, y, frame.x(sub) - frame.left, thickness, &theme.subset.to_string(), &[("data-p", format!("{:.6}", sub))]);
        }
        svg.text("value-label", (frame.x(p) + 6.0).min(frame.right() + 40.0), y + thickness / 2.0 + 4.0, "start", &percent(p), &text);
        svg.end_group();
    }
    svg.line("axis", (frame.left, frame.top), (frame.left, frame.bottom()), &theme.axis.to_string(), 1.0, None);
    svg.finish()
}
