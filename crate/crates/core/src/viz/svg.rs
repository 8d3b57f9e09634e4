use std::fmt::Write;

use super::{Provenance, SvgDocument, Theme};

/// Fixed two-decimal coordinates; never prints `-0.00`.
pub(crate) fn num(v: f64) -> String {
    let s = format!("{:.2}", v);
    if s == "-0.00" {
        "0.00".to_owned()
    } else {
        s
    }
}

pub(crate) fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Percent label: whole numbers without decimals, otherwise one decimal.
pub(crate) fn percent(p: f64) -> String {
    let tenths = (p * 1000.0).round();
    if tenths % 10.0 == 0.0 {
        format!("{:.0}%", tenths / 10.0)
    } else {
        format!("{:.1}%", tenths / 10.0)
    }
}

/// Path data through `points`; closed with `Z` when `close` is set.
pub(crate) fn path_data(points: &[(f64, f64)], close: bool) -> String {
    let mut d = String::new();
    for (i, (x, y)) in points.iter().enumerate() {
        let _ = write!(d, "{}{},{}", if i == 0 { "M" } else { " L" }, num(*x), num(*y));
    }
    if close && !points.is_empty() {
        d.push_str(" Z");
    }
    d
}

pub(crate) struct Svg {
    out: String,
    depth: usize,
}

impl Svg {
    pub fn new(title: &str, prov: &Provenance, theme: &Theme) -> Self {
        let (w, h) = (f64::from(theme.width), f64::from(theme.height));
        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        let _ = writeln!(out, "<!-- koalition seed={} m={} as_of={} -->", prov.seed, prov.m, prov.as_of.format("%Y-%m-%d"));
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" font-family=\"{}\" font-size=\"{}\">",
            theme.width,
            theme.height,
            theme.width,
            theme.height,
            escape(&theme.font_family),
            theme.font_size
        );
        let mut svg = Svg { out, depth: 1 };
        svg.leaf("title", &[], Some(title));
        svg.leaf(
            "rect",
            &[("class", "background".into()), ("x", "0".into()), ("y", "0".into()), ("width", num(w)), ("height", num(h)), ("fill", theme.background.to_string())],
            None,
        );
        svg
    }

    fn indent(&mut self) {
        for _ in 0..self.depth {
            self.out.push_str("  ");
        }
    }

    fn attrs(&mut self, attrs: &[(&str, String)]) {
        for (k, v) in attrs {
            let _ = write!(self.out, " {}=\"{}\"", k, escape(v));
        }
    }

    pub fn leaf(&mut self, name: &str, attrs: &[(&str, String)], text: Option<&str>) {
        self.indent();
        let _ = write!(self.out, "<{name}");
        self.attrs(attrs);
        match text {
            Some(t) => {
                let _ = writeln!(self.out, ">{}</{name}>", escape(t));
            }
            None => self.out.push_str("/>\n"),
        }
    }

    pub fn open(&mut self, name: &str, attrs: &[(&str, String)]) {
        self.indent();
        let _ = write!(self.out, "<{name}");
        self.attrs(attrs);
        self.out.push_str(">\n");
        self.depth += 1;
    }

    pub fn close(&mut self, name: &str) {
        self.depth -= 1;
        self.indent();
        let _ = writeln!(self.out, "</{name}>");
    }

    pub fn group(&mut self, class: &str, translate: Option<(f64, f64)>) {
        let mut attrs = vec![("class", class.to_owned())];
        if let Some((x, y)) = translate {
            attrs.push(("transform", format!("translate({},{})", num(x), num(y))));
        }
        self.open("g", &attrs);
    }

    pub fn end_group(&mut self) {
        self.close("g");
    }

    #[allow(clippy::too_many_arguments)]
    pub fn rect(&mut self, class: &str, x: f64, y: f64, w: f64, h: f64, fill: &str, extra: &[(&str, String)]) {
        let mut attrs = vec![
            ("class", class.to_owned()),
            ("x", num(x)),
            ("y", num(y)),
            ("width", num(w.max(0.0))),
            ("height", num(h.max(0.0))),
            ("fill", fill.to_owned()),
        ];
        attrs.extend(extra.iter().cloned());
        self.leaf("rect", &attrs, None);
    }

    pub fn line(&mut self, class: &str, (x1, y1): (f64, f64), (x2, y2): (f64, f64), stroke: &str, width: f64, dash: Option<&str>) {
        let mut attrs = vec![
            ("class", class.to_owned()),
            ("x1", num(x1)),
            ("y1", num(y1)),
            ("x2", num(x2)),
            ("y2", num(y2)),
            ("stroke", stroke.to_owned()),
            ("stroke-width", num(width)),
        ];
        if let Some(d) = dash {
            attrs.push(("stroke-dasharray", d.to_owned()));
        }
        self.leaf("line", &attrs, None);
    }

    pub fn path(&mut self, class: &str, d: String, fill: &str, stroke: Option<(&str, f64)>, extra: &[(&str, String)]) {
        let mut attrs = vec![("class", class.to_owned()), ("d", d), ("fill", fill.to_owned())];
        if let Some((color, width)) = stroke {
            attrs.push(("stroke", color.to_owned()));
            attrs.push(("stroke-width", num(width)));
        }
        attrs.extend(extra.iter().cloned());
        self.leaf("path", &attrs, None);
    }

    pub fn circle(&mut self, class: &str, cx: f64, cy: f64, r: f64, fill: &str, extra: &[(&str, String)]) {
        let mut attrs = vec![("class", class.to_owned()), ("cx", num(cx)), ("cy", num(cy)), ("r", num(r)), ("fill", fill.to_owned())];
        attrs.extend(extra.iter().cloned());
        self.leaf("circle", &attrs, None);
    }

    pub fn text(&mut self, class: &str, x: f64, y: f64, anchor: &str, content: &str, fill: &str) {
        self.leaf(
            "text",
            &[("class", class.to_owned()), ("x", num(x)), ("y", num(y)), ("text-anchor", anchor.to_owned()), ("fill", fill.to_owned())],
            Some(content),
        );
    }

    pub fn finish(mut self) -> SvgDocument {
        self.out.push_str("</svg>\n");
        SvgDocument(self.out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting() {
        assert_eq!(num(1.0), "1.00");
        assert_eq!(num(-0.001), "0.00");
        assert_eq!(num(12.345_6), "12.35");
    }

    #[test]
    fn percent_labels() {
        assert_eq!(percent(0.17), "17%");
        assert_eq!(percent(0.175), "17.5%");
        assert_eq!(percent(0.0), "0%");
        assert_eq!(percent(1.0), "100%");
    }

    #[test]
    fn escaping() {
        assert_eq!(escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }

    #[test]
    fn path_closing() {
        assert_eq!(path_data(&[(0.0, 1.0), (2.0, 3.5)], true), "M0.00,1.00 L2.00,3.50 Z");
        assert_eq!(path_data(&[], true), "");
    }
}
