use crate::electoral::SeatAllocation;
use crate::ingest::{PartyId, PartyRegistry};

use super::svg::Svg;
use super::{Frame, Provenance, SvgDocument, Theme};

/// Simulated parliaments as stacked horizontal bars. Coalition parties come
/// first (in the given order) so a majority shows as the group crossing the
/// middle dashed line; the dashed lines mark quarters of the house.
pub fn render_parliaments(
    allocs: &[SeatAllocation],
    coalition: &[PartyId],
    registry: &PartyRegistry,
    prov: &Provenance,
    theme: &Theme,
) -> SvgDocument {
    let label = coalition.iter().map(PartyId::as_str).collect::<Vec<_>>().join(" + ");
    let title = format!("Simulated parliaments, grouped for {label}");
    let mut svg = Svg::new(&title, prov, theme);
    let frame = Frame::inset(theme, 60.0, 40.0, 70.0, 50.0);
    let text = theme.text.to_string();
    svg.text("title", 20.0, 24.0, "start", &title, &text);

    let members: Vec<usize> = coalition.iter().filter_map(|id| registry.index_of(id.as_str())).collect();
    let order: Vec<usize> = members.iter().copied().chain((0..registry.len()).filter(|i| !members.contains(i))).collect();

    let row = frame.height / allocs.len().max(1) as f64;
    let thickness = (row * 0.7).min(48.0);
    for (r, alloc) in allocs.iter().enumerate() {
        let y = frame.top + row * r as f64 + (row - thickness) / 2.0;
        svg.group("parliament", None);
        svg.text("row-label", frame.left - 8.0, y + thickness / 2.0 + 4.0, "end", &format!("#{}", r + 1), &text);
        let house: u32 = alloc.seats.iter().sum();
        if alloc.hung || house == 0 {
            svg.rect("hung-bar", frame.left, y, frame.width, thickness, "none", &[("stroke", theme.axis.to_string())]);
            svg.text("hung-marker", frame.x(0.5), y + thickness / 2.0 + 4.0, "middle", "hung", &text);
            svg.end_group();
            continue;
        }
        let mut filled = 0u32;
        for &i in &order {
            let seats = alloc.seats.get(i).copied().unwrap_or(0);
            if seats == 0 {
                continue;
            }
            let x0 = frame.x(f64::from(filled) / f64::from(house));
            filled += seats;
            let x1 = frame.x(f64::from(filled) / f64::from(house));
            let party = registry.party(i);
            svg.rect(
                "seat-segment",
                x0,
                y,
                x1 - x0,
                thickness,
                &party.color.to_string(),
                &[("data-party", party.id.to_string()), ("data-seats", seats.to_string())],
            );
        }
        let joint: u32 = members.iter().map(|&i| alloc.seats.get(i).copied().unwrap_or(0)).sum();
        svg.text("coalition-seats", frame.right() + 8.0, y + thickness / 2.0 + 4.0, "start", &format!("{joint}/{house}"), &text);
        svg.end_group();
    }

    let quartile = theme.quartile.to_string();
    for q in [0.25, 0.5, 0.75] {
        let x = frame.x(q);
        svg.line("quartile", (x, frame.top), (x, frame.bottom()), &quartile, 1.5, Some(&theme.quartile_dash));
    }

    let mut x = frame.left;
    let legend_y = frame.bottom() + 28.0;
    for &i in &order {
        let party = registry.party(i);
        if x + 16.0 > frame.right() {
            break;
        }
        svg.rect("legend-swatch", x, legend_y - 10.0, 12.0, 12.0, &party.color.to_string(), &[]);
        svg.text("legend-label", x + 16.0, legend_y, "start", &party.name, &text);
        x += 24.0 + 8.0 * party.name.chars().count() as f64;
    }
    svg.finish()
}
