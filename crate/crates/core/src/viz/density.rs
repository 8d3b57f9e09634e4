use chrono::NaiveDate;

use crate::kde::Density;
use crate::poe::SeatShareDistribution;

use super::svg::{path_data, percent, Svg};
use super::{date_label, Frame, Provenance, SvgDocument, Theme};

/// Height of the density at `x` by linear interpolation on its grid.
fn height_at(density: &Density, x: f64) -> f64 {
    let n = density.grid.len();
    if n == 0 {
        return 0.0;
    }
    let pos = (x * (n - 1) as f64).clamp(0.0, (n - 1) as f64);
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let t = pos - lo as f64;
    density.heights[lo] * (1.0 - t) + density.heights[hi] * t
}

type Outline = Vec<(f64, f64)>;

/// Visible part of the seat-share axis.
#[derive(Clone, Copy, Debug)]
struct ShareAxis {
    lo: f64,
    hi: f64,
}

impl ShareAxis {
    /// Where any of the densities exceeds a thousandth of its peak, padded
    /// and widened to whole 5% steps; always contains 50%.
    fn fit<'a>(densities: impl Iterator<Item = &'a Density>) -> Self {
        let (mut lo, mut hi) = (0.5f64, 0.5f64);
        for d in densities {
            let peak = d.heights.iter().cloned().fold(0.0, f64::max);
            let visible = |(_, &h): &(&f64, &f64)| h > peak * 1e-3;
            if let Some((&g, _)) = d.grid.iter().zip(&d.heights).find(visible) {
                lo = lo.min(g);
            }
            if let Some((&g, _)) = d.grid.iter().zip(&d.heights).rev().find(visible) {
                hi = hi.max(g);
            }
        }
        let lo = ((lo - 0.02) * 20.0).floor().max(0.0) / 20.0;
        let hi = ((hi + 0.02) * 20.0).ceil().min(20.0) / 20.0;
        ShareAxis { lo, hi }
    }

    fn t(&self, share: f64) -> f64 {
        (share - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<f64> {
        let span = self.hi - self.lo;
        let step = if span <= 0.3 { 0.05 } else if span <= 0.6 { 0.1 } else { 0.25 };
        let first = (self.lo / step - 1e-9).ceil() as i64;
        let last = (self.hi / step + 1e-9).floor() as i64;
        (first..=last).map(|i| i as f64 * step).collect()
    }
}

/// Outline of the visible density (closed along the baseline) and of the
/// part above 50%, in the coordinates given by `to_xy`.
fn density_shapes(density: &Density, axis: ShareAxis, to_xy: impl Fn(f64, f64) -> (f64, f64)) -> (Outline, Outline) {
    let inside = |g: f64| g > axis.lo && g < axis.hi;
    let points = || density.grid.iter().zip(&density.heights).filter(|(&g, _)| inside(g));
    let mut area = vec![to_xy(axis.lo, 0.0), to_xy(axis.lo, height_at(density, axis.lo))];
    area.extend(points().map(|(&g, &h)| to_xy(g, h)));
    area.push(to_xy(axis.hi, height_at(density, axis.hi)));
    area.push(to_xy(axis.hi, 0.0));

    let mut majority = vec![to_xy(0.5, 0.0), to_xy(0.5, height_at(density, 0.5))];
    majority.extend(points().filter(|(&g, _)| g > 0.5).map(|(&g, &h)| to_xy(g, h)));
    majority.push(to_xy(axis.hi, height_at(density, axis.hi)));
    majority.push(to_xy(axis.hi, 0.0));
    (area, majority)
}

fn coalition_label(dist: &SeatShareDistribution) -> String {
    dist.coalition.iter().map(|p| p.as_str()).collect::<Vec<_>>().join(" + ")
}

/// Seat-share density of one coalition: the area past 50% in the majority
/// color, the 95% interval as a bar under the curve.
pub fn render_seat_density(dist: &SeatShareDistribution, prov: &Provenance, theme: &Theme) -> SvgDocument {
    let title = format!("Seat share of {}", coalition_label(dist));
    let mut svg = Svg::new(&title, prov, theme);
    let frame = Frame::inset(theme, 40.0, 50.0, 30.0, 60.0);
    let text = theme.text.to_string();
    let axis = theme.axis.to_string();
    svg.text("title", frame.left, 24.0, "start", &title, &text);
    svg.text(
        "subtitle",
        frame.left,
        40.0,
        "start",
        &format!("P(majority) = {}", percent(dist.majority_mass)),
        &text,
    );

    let h_max = dist.density.heights.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE) * 1.05;
    let axis_range = ShareAxis::fit(std::iter::once(&dist.density));
    let x = |g: f64| frame.x(axis_range.t(g));
    let to_xy = |g: f64, h: f64| (x(g), frame.y(h / h_max));
    let (area, majority) = density_shapes(&dist.density, axis_range, to_xy);
    let curve = &area[1..area.len() - 1];

    svg.path("density-area", path_data(&area, true), "#e6e6e6", None, &[]);
    if dist.majority_mass > 0.0 {
        svg.path("majority-fill", path_data(&majority, true), &theme.majority.to_string(), None, &[]);
    }
    svg.path("density-curve", path_data(curve, false), "none", Some((&axis, 1.5)), &[]);

    let base = frame.bottom();
    svg.line("axis", (frame.left, base), (frame.right(), base), &axis, 1.0, None);
    let (lo, hi) = dist.ci95;
    svg.rect("ci95", x(lo), base + 6.0, x(hi) - x(lo), 8.0, &theme.ci_bar.to_string(), &[]);
    svg.line("ref-50", (x(0.5), frame.top), (x(0.5), base + 18.0), "#000000", 1.0, Some("4 3"));
    for q in axis_range.ticks() {
        svg.text("axis-label", x(q), base + 34.0, "middle", &percent(q), &text);
    }
    svg.text("axis-title", frame.x(0.5), base + 52.0, "middle", "share of seats", &text);
    svg.finish()
}

struct RidgeLayout {
    frame: Frame,
    axis: ShareAxis,
    step: f64,
    peak: f64,
    h_max: f64,
}

const RIDGE_OVERLAP: f64 = 1.8;

impl RidgeLayout {
    fn new<'a>(frame: Frame, rows: usize, series: impl Iterator<Item = &'a SeatShareDistribution> + Clone) -> Self {
        let step = frame.height / (rows as f64 + RIDGE_OVERLAP - 1.0);
        let axis = ShareAxis::fit(series.clone().map(|d| &d.density));
        RidgeLayout { frame, axis, step, peak: step * RIDGE_OVERLAP, h_max: max_height(series) }
    }

    fn x(&self, share: f64) -> f64 {
        self.frame.x(self.axis.t(share))
    }

    fn baseline(&self, row: usize) -> f64 {
        self.frame.top + self.peak + self.step * row as f64
    }
}

fn max_height<'a>(series: impl Iterator<Item = &'a SeatShareDistribution>) -> f64 {
    series
        .flat_map(|d| d.density.heights.iter().cloned())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE)
}

/// Draws one ridge per entry of `series` in pane-local coordinates. Rows
/// come from `rows` (oldest first); later rows are drawn last so they
/// occlude the ones above.
fn draw_ridges(svg: &mut Svg, series: &[&(NaiveDate, SeatShareDistribution)], rows: &[NaiveDate], layout: &RidgeLayout, theme: &Theme) {
    let frame = layout.frame;
    let text = theme.text.to_string();
    let axis = theme.axis.to_string();
    let mut ordered: Vec<&&(NaiveDate, SeatShareDistribution)> = series.iter().collect();
    ordered.sort_by_key(|(d, _)| *d);
    for (date, dist) in ordered.into_iter().map(|e| (&e.0, &e.1)) {
        let row = rows.iter().position(|r| r == date).expect("row for every date");
        let base = layout.baseline(row);
        let to_xy = |g: f64, h: f64| (layout.x(g), base - (h / layout.h_max).clamp(0.0, 1.0) * layout.peak);
        let (area, majority) = density_shapes(&dist.density, layout.axis, to_xy);
        svg.group("ridge", None);
        svg.path("ridge-area", path_data(&area, true), "#f5f5f5", Some((&axis, 1.0)), &[("data-date", date_label(*date))]);
        if dist.majority_mass > 0.0 {
            svg.path("majority-fill", path_data(&majority, true), &theme.majority.to_string(), None, &[]);
        }
        let (lo, hi) = dist.ci95;
        svg.line("ci95", (layout.x(lo), base), (layout.x(hi), base), &theme.ci_bar.to_string(), 3.0, None);
        svg.text("date-label", frame.left - 8.0, base, "end", &date_label(*date), &text);
        svg.end_group();
    }
    let bottom = layout.baseline(rows.len().saturating_sub(1));
    svg.line("ref-50", (layout.x(0.5), frame.top), (layout.x(0.5), bottom), "#000000", 1.5, None);
    for q in layout.axis.ticks() {
        svg.text("axis-label", layout.x(q), bottom + 18.0, "middle", &percent(q), &text);
    }
}

fn sorted_dates<'a>(series: impl Iterator<Item = &'a (NaiveDate, SeatShareDistribution)>) -> Vec<NaiveDate> {
    let mut dates: Vec<NaiveDate> = series.map(|(d, _)| *d).collect();
    dates.sort();
    dates.dedup();
    dates
}

/// Seat-share densities over time, oldest at the top, newest at the bottom.
pub fn render_ridgeline(series: &[(NaiveDate, SeatShareDistribution)], prov: &Provenance, theme: &Theme) -> SvgDocument {
    let title = match series.first() {
        Some((_, d)) => format!("Seat share of {} over time", coalition_label(d)),
        None => "Seat share over time".to_owned(),
    };
    let mut svg = Svg::new(&title, prov, theme);
    svg.text("title", 20.0, 24.0, "start", &title, &theme.text.to_string());
    let rows = sorted_dates(series.iter());
    let frame = Frame::inset(theme, 100.0, 40.0, 30.0, 30.0);
    let layout = RidgeLayout::new(frame, rows.len().max(1), series.iter().map(|(_, d)| d));
    svg.group("pane", None);
    let all: Vec<_> = series.iter().collect();
    draw_ridges(&mut svg, &all, &rows, &layout, theme);
    svg.end_group();
    svg.finish()
}

/// Nowcast ridges (left) next to the forecasts made on the same dates for
/// election day (right), on a shared time axis and density scale.
pub fn render_forecast_ridgeline(
    nowcast: &[(NaiveDate, SeatShareDistribution)],
    forecast: &[(NaiveDate, SeatShareDistribution)],
    prov: &Provenance,
    theme: &Theme,
) -> SvgDocument {
    let title = "Nowcast and forecast seat shares";
    let mut svg = Svg::new(title, prov, theme);
    let text = theme.text.to_string();
    svg.text("title", 20.0, 20.0, "start", title, &text);
    let rows = sorted_dates(nowcast.iter().chain(forecast));
    let half = f64::from(theme.width) / 2.0;
    let pane_theme = Theme { width: half.floor() as u32, ..theme.clone() };
    let frame = Frame::inset(&pane_theme, 90.0, 50.0, 15.0, 30.0);
    let layout = RidgeLayout::new(frame, rows.len().max(1), nowcast.iter().chain(forecast).map(|(_, d)| d));

    for (offset, label, series) in [(0.0, "Nowcast", nowcast), (half.floor(), "Forecast for election day", forecast)] {
        svg.group("pane", Some((offset, 0.0)));
        svg.text("pane-title", frame.left, 40.0, "start", label, &text);
        let all: Vec<_> = series.iter().collect();
        draw_ridges(&mut svg, &all, &rows, &layout, theme);
        svg.end_group();
    }
    svg.finish()
}
