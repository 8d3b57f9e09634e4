use chrono::NaiveDate;

use crate::forecast::FanChart;
use crate::ingest::{PartyRegistry, Poll};
use crate::poe::PoEResult;

use super::svg::{path_data, percent, Svg};
use super::{date_label, Frame, PoeAxis, Provenance, SvgDocument, Theme};

pub(crate) const POE_GRIDLINES: [f64; 7] = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99];

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Position of probability `p` on the vertical axis, in [0, 1].
pub(crate) fn poe_position(p: f64, axis: PoeAxis) -> f64 {
    match axis {
        PoeAxis::Linear => p.clamp(0.0, 1.0),
        PoeAxis::Logit => {
            let lo = logit(0.01);
            (logit(p.clamp(0.01, 0.99)) - lo) / (logit(0.99) - lo)
        }
    }
}

/// Maps dates onto [0, 1] between `start` and `end`; a single date sits in
/// the middle.
struct TimeAxis {
    start: NaiveDate,
    span: f64,
}

impl TimeAxis {
    fn new(start: NaiveDate, end: NaiveDate) -> Self {
        TimeAxis { start, span: (end - start).num_days() as f64 }
    }

    fn at(&self, d: NaiveDate) -> f64 {
        if self.span <= 0.0 {
            0.5
        } else {
            (d - self.start).num_days() as f64 / self.span
        }
    }
}

/// Majority probability over time on a logit (or linear) axis.
pub fn render_poe_timeline(series: &[(NaiveDate, PoEResult)], prov: &Provenance, theme: &Theme) -> SvgDocument {
    let title = "Probability of a majority over time";
    let mut svg = Svg::new(title, prov, theme);
    let frame = Frame::inset(theme, 60.0, 40.0, 30.0, 40.0);
    let text = theme.text.to_string();
    svg.text("title", 20.0, 24.0, "start", title, &text);

    for &g in &POE_GRIDLINES {
        let y = frame.y(poe_position(g, theme.poe_axis));
        let (color, width) = if g == 0.5 { ("#000000", 1.5) } else { ("#d0d0d0", 1.0) };
        svg.leaf(
            "line",
            &[
                ("class", "gridline".into()),
                ("data-p", format!("{g}")),
                ("x1", super::svg::num(frame.left)),
                ("y1", super::svg::num(y)),
                ("x2", super::svg::num(frame.right())),
                ("y2", super::svg::num(y)),
                ("stroke", color.into()),
                ("stroke-width", super::svg::num(width)),
            ],
            None,
        );
        svg.text("axis-label", frame.left - 6.0, y + 4.0, "end", &percent(g), &text);
    }

    let mut points: Vec<&(NaiveDate, PoEResult)> = series.iter().collect();
    points.sort_by_key(|(d, _)| *d);
    if let (Some(first), Some(last)) = (points.first(), points.last()) {
        let time = TimeAxis::new(first.0, last.0);
        let xy: Vec<(f64, f64)> = points
            .iter()
            .map(|(d, r)| (frame.x(time.at(*d)), frame.y(poe_position(r.probability, theme.poe_axis))))
            .collect();
        svg.path("poe-line", path_data(&xy, false), "none", Some((&theme.majority.to_string(), 2.0)), &[]);
        for ((d, r), (x, y)) in points.iter().zip(&xy) {
            svg.circle("poe-point", *x, *y, 3.0, &theme.majority.to_string(), &[("data-date", date_label(*d)), ("data-p", format!("{:.6}", r.probability))]);
        }
        svg.text("axis-label", frame.left, frame.bottom() + 18.0, "start", &date_label(first.0), &text);
        if last.0 != first.0 {
            svg.text("axis-label", frame.right(), frame.bottom() + 18.0, "end", &date_label(last.0), &text);
        }
    }
    svg.line("axis", (frame.left, frame.bottom()), (frame.right(), frame.bottom()), &theme.axis.to_string(), 1.0, None);
    svg.finish()
}

/// Party shares over time with 95% bands, the individual polls as dots, a
/// vertical line at the as-of date and the x-axis ending on election day.
pub fn render_fan_chart(fan: &FanChart, polls: &[Poll], registry: &PartyRegistry, prov: &Provenance, theme: &Theme) -> SvgDocument {
    let title = format!("Poll shares and forecast to {}", date_label(fan.election_date));
    let mut svg = Svg::new(&title, prov, theme);
    let frame = Frame::inset(theme, 50.0, 40.0, 90.0, 40.0);
    let text = theme.text.to_string();
    svg.text("title", 20.0, 24.0, "start", &title, &text);

    let first = fan
        .bands
        .iter()
        .flatten()
        .map(|p| p.date)
        .chain(polls.iter().map(|p| p.publish_date))
        .min()
        .unwrap_or(fan.as_of)
        .min(fan.as_of);
    let time = TimeAxis::new(first, fan.election_date);
    let top = fan
        .bands
        .iter()
        .flatten()
        .map(|p| p.high)
        .chain(polls.iter().flat_map(|p| p.shares.iter().cloned()))
        .fold(0.0, f64::max);
    let y_max = ((top * 20.0).ceil() / 20.0).max(0.05);
    let sx = |d: NaiveDate| frame.x(time.at(d));
    let sy = |v: f64| frame.y(v / y_max);

    let ticks = (y_max * 20.0).round() as u32;
    for t in 0..=ticks {
        let v = f64::from(t) * 0.05;
        if t % 2 == 0 || ticks <= 6 {
            svg.line("gridline", (frame.left, sy(v)), (frame.right(), sy(v)), "#e6e6e6", 1.0, None);
            svg.text("axis-label", frame.left - 6.0, sy(v) + 4.0, "end", &percent(v), &text);
        }
    }

    for (band, id) in fan.bands.iter().zip(&fan.parties) {
        let Some(k) = registry.index_of(id.as_str()) else { continue };
        let color = registry.party(k).color.to_string();
        if band.is_empty() {
            continue;
        }
        let mut outline: Vec<(f64, f64)> = band.iter().map(|p| (sx(p.date), sy(p.high))).collect();
        outline.extend(band.iter().rev().map(|p| (sx(p.date), sy(p.low))));
        svg.group("party-fan", None);
        svg.path("band", path_data(&outline, true), &color, None, &[("fill-opacity", "0.25".into()), ("data-party", id.to_string())]);
        let mean: Vec<(f64, f64)> = band.iter().map(|p| (sx(p.date), sy(p.mean))).collect();
        svg.path("mean-line", path_data(&mean, false), "none", Some((&color, 2.0)), &[]);
        if let Some(last) = band.last() {
            svg.text("party-label", frame.right() + 6.0, sy(last.mean) + 4.0, "start", &registry.party(k).name, &text);
        }
        svg.end_group();
    }

    svg.group("polls", None);
    for poll in polls {
        for id in &fan.parties {
            let Some(k) = registry.index_of(id.as_str()) else { continue };
            let share = poll.shares.get(k).copied().unwrap_or(0.0);
            svg.circle(
                "poll-dot",
                sx(poll.publish_date),
                sy(share),
                2.5,
                &registry.party(k).color.to_string(),
                &[("data-party", id.to_string())],
            );
        }
    }
    svg.end_group();

    let x_now = sx(fan.as_of);
    svg.line("asof-line", (x_now, frame.top), (x_now, frame.bottom()), "#000000", 1.5, None);
    svg.text("asof-label", x_now, frame.top - 6.0, "middle", &date_label(fan.as_of), &text);
    svg.line("axis", (frame.left, frame.bottom()), (frame.right(), frame.bottom()), &theme.axis.to_string(), 1.0, None);
    svg.text("axis-label", frame.left, frame.bottom() + 18.0, "start", &date_label(first), &text);
    svg.text("axis-label", frame.right(), frame.bottom() + 18.0, "end", &format!("election {}", date_label(fan.election_date)), &text);
    svg.finish()
}
