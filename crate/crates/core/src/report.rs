//! Run summaries and file exports: summary.json, histogram.csv, cdf.svg,
//! sweep.csv, sweep.svg and optimum.json.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analysis::{collection_ratio, shot_noise_gain, Ratio, SweepRow};
use crate::config::SceneConfig;
use crate::detect::{angular_cdf, na_07_half_angle_deg, AngularCdf, Side, TallySet, BIN_WIDTH_DEG};
use crate::scene::AssemblyInfo;
use crate::tracer::{RunReport, TallyMode};

pub const SUMMARY_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideSummary {
    pub exited_power: f64,
    pub exited_count: u64,
    pub collected_power: f64,
    pub collected_count: u64,
    /// Share of this side's exiting power with alpha below 45 degrees.
    pub fraction_below_45deg: Option<f64>,
    /// Share of this side's exiting power inside NA 0.7.
    pub fraction_below_na07: Option<f64>,
}

impl SideSummary {
    fn new(tally: &TallySet, side: Side) -> Self {
        let t = tally.side(side);
        let share = |p: f64| (t.exited_power > 0.0).then(|| p / t.exited_power);
        Self {
            exited_power: t.exited_power,
            exited_count: t.exited_count,
            collected_power: t.collected_power,
            collected_count: t.collected_count,
            fraction_below_45deg: t.fraction_within(45.0),
            fraction_below_na07: share(t.below_na07_power),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerBalance {
    pub emitted: f64,
    pub exited: f64,
    pub killed: f64,
    pub capped: f64,
    pub lost: f64,
    pub roulette_killed: f64,
    pub roulette_boost: f64,
    pub imbalance: f64,
}

/// Machine-readable result of one trace. Contains no timestamps and no
/// worker count, so equal inputs give byte-identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub version: u32,
    pub seed: u64,
    pub ray_count: u64,
    pub mode: TallyMode,
    pub ratio: Option<Ratio>,
    pub shot_noise_gain: Option<f64>,
    pub front: SideSummary,
    pub back: SideSummary,
    pub power: PowerBalance,
    pub lost_rays: u64,
    pub interactions: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assembly: Option<AssemblyInfo>,
    pub config: SceneConfig,
    pub tally: TallySet,
}

impl Summary {
    pub fn new(report: &RunReport, config: &SceneConfig, assembly: Option<&AssemblyInfo>) -> Self {
        let ratio = collection_ratio(report).ok();
        let mut config = config.clone();
        config.tracer.workers = 0;
        Self {
            version: SUMMARY_VERSION,
            seed: report.seed,
            ray_count: report.ray_count,
            mode: report.mode,
            ratio,
            shot_noise_gain: ratio.and_then(Ratio::value).map(shot_noise_gain),
            front: SideSummary::new(&report.tally, Side::Front),
            back: SideSummary::new(&report.tally, Side::Back),
            power: PowerBalance {
                emitted: report.emitted_power,
                exited: report.exited_power,
                killed: report.killed_power,
                capped: report.capped_power,
                lost: report.lost_power,
                roulette_killed: report.roulette_killed_power,
                roulette_boost: report.roulette_boost_power,
                imbalance: report.power_imbalance(),
            },
            lost_rays: report.lost_rays,
            interactions: report.interactions,
            assembly: assembly.cloned(),
            config,
            tally: report.tally.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }

    /// Short human-readable report.
    pub fn text(&self) -> String {
        let mut s = String::new();
        match self.ratio {
            Some(Ratio::Finite(r)) => writeln!(s, "back/front ratio = {r:.3}").unwrap(),
            Some(Ratio::Unbounded) => writeln!(s, "back/front ratio = unbounded (nothing collected in front)").unwrap(),
            None => writeln!(s, "back/front ratio = undefined (nothing collected at the back)").unwrap(),
        }
        if let Some(g) = self.shot_noise_gain {
            writeln!(s, "shot-noise gain  = {g:.3}").unwrap();
        }
        for (name, side) in [("back", &self.back), ("front", &self.front)] {
            writeln!(
                s,
                "{name:5} collected {:.5} of emitted power ({} rays), exited {:.5}",
                side.collected_power, side.collected_count, side.exited_power
            )
            .unwrap();
        }
        if let Some(f) = self.back.fraction_below_45deg {
            writeln!(s, "back exits below 45 deg: {:.1}%", 100.0 * f).unwrap();
        }
        writeln!(
            s,
            "power: exited {:.6}, roulette {:.2e}, capped {:.2e}, lost {:.2e}",
            self.power.exited, self.power.killed, self.power.capped, self.power.lost
        )
        .unwrap();
        s
    }
}

/// Cumulative angular fractions per side, one row per bin edge.
pub fn histogram_csv(tally: &TallySet) -> String {
    let front = angular_cdf(tally, Side::Front);
    let back = angular_cdf(tally, Side::Back);
    let mut s = String::from("alpha_deg,cumulative_fraction_front,cumulative_fraction_back\n");
    let at = |c: &AngularCdf, i: usize| c.points.get(i).map_or(0.0, |p| p.1);
    for i in 0..=crate::detect::HISTOGRAM_BINS {
        writeln!(s, "{},{},{}", i as f64 * BIN_WIDTH_DEG, at(&front, i), at(&back, i)).unwrap();
    }
    s
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 55.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }

    fn axes(&self, s: &mut String, xlabel: &str, ylabel: &str, xticks: &[f64], yticks: &[f64]) {
        let (l, r, t, b) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
        writeln!(s, r##"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="#000"/>"##, r - l, b - t)
            .unwrap();
        for &x in xticks {
            let p = self.px(x);
            writeln!(s, r##"<line x1="{p:.2}" y1="{b}" x2="{p:.2}" y2="{}" stroke="#000"/>"##, b + 5.0).unwrap();
            writeln!(s, r#"<text x="{p:.2}" y="{}" text-anchor="middle" font-size="12">{}</text>"#, b + 20.0, num(x))
                .unwrap();
        }
        for &y in yticks {
            let p = self.py(y);
            writeln!(s, r##"<line x1="{}" y1="{p:.2}" x2="{l}" y2="{p:.2}" stroke="#000"/>"##, l - 5.0).unwrap();
            writeln!(
                s,
                r#"<text x="{}" y="{:.2}" text-anchor="end" font-size="12">{}</text>"#,
                l - 8.0,
                p + 4.0,
                num(y)
            )
            .unwrap();
        }
        writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{xlabel}</text>"#,
            (l + r) / 2.0,
            H - 12.0
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="18" y="{0}" text-anchor="middle" font-size="13" transform="rotate(-90 18 {0})">{ylabel}</text>"#,
            (t + b) / 2.0
        )
        .unwrap();
    }

    fn polyline(&self, s: &mut String, pts: &[(f64, f64)], color: &str, dash: Option<&str>) {
        let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", self.px(*x), self.py(*y))).collect();
        let dash = dash.map(|d| format!(r#" stroke-dasharray="{d}""#)).unwrap_or_default();
        writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2"{dash} points="{}"/>"#, coords.join(" "))
            .unwrap();
    }

    fn vline(&self, s: &mut String, x: f64, color: &str, dash: &str) {
        let p = self.px(x);
        writeln!(
            s,
            r#"<line x1="{p:.2}" y1="{TOP}" x2="{p:.2}" y2="{}" stroke="{color}" stroke-width="1.5" stroke-dasharray="{dash}"/>"#,
            H - BOTTOM
        )
        .unwrap();
    }
}

fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn svg_open() -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n"
    )
}

fn legend(s: &mut String, items: &[(&str, &str, Option<&str>)]) {
    for (i, (label, color, dash)) in items.iter().enumerate() {
        let y = TOP + 18.0 + 18.0 * i as f64;
        let x = LEFT + 14.0;
        let dash = dash.map(|d| format!(r#" stroke-dasharray="{d}""#)).unwrap_or_default();
        writeln!(s, r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"{dash}/>"#, x + 24.0)
            .unwrap();
        writeln!(s, r#"<text x="{}" y="{}" font-size="12">{label}</text>"#, x + 30.0, y + 4.0).unwrap();
    }
}

/// Cumulative angular distribution of exiting power per side, with
/// markers at NA 0.7 and at 45 degrees.
pub fn cdf_svg(tally: &TallySet) -> String {
    let front = angular_cdf(tally, Side::Front);
    let back = angular_cdf(tally, Side::Back);
    let f = Frame { x0: 0.0, x1: 90.0, y0: 0.0, y1: 1.0 };
    let mut s = svg_open();
    let ticks: Vec<f64> = (0..=9).map(|i| 10.0 * i as f64).collect();
    let yticks: Vec<f64> = (0..=5).map(|i| 0.2 * i as f64).collect();
    f.axes(&mut s, "alpha (deg)", "cumulative fraction of exiting power", &ticks, &yticks);
    f.vline(&mut s, na_07_half_angle_deg(), "#d62728", "6 4");
    f.vline(&mut s, 45.0, "#888888", "6 4");
    if !back.empty {
        f.polyline(&mut s, &back.points, "#1f77b4", None);
    }
    if !front.empty {
        f.polyline(&mut s, &front.points, "#ff7f0e", None);
    }
    legend(
        &mut s,
        &[
            ("back", "#1f77b4", None),
            ("front", "#ff7f0e", None),
            ("NA 0.7 (44.43 deg)", "#d62728", Some("6 4")),
            ("45 deg", "#888888", Some("6 4")),
        ],
    );
    s.push_str("</svg>\n");
    s
}

pub fn sweep_csv(parameter: &str, rows: &[SweepRow]) -> String {
    let mut s =
        String::from("parameter,value,ratio,back_collected,front_collected,back_exited,front_exited,capped,error\n");
    for r in rows {
        let err = r.error.as_deref().unwrap_or("").replace(['"', '\n'], " ");
        match &r.metrics {
            Some(m) => writeln!(
                s,
                "{parameter},{},{},{},{},{},{},{},",
                r.value,
                m.ratio.map_or("unbounded".to_string(), |x| x.to_string()),
                m.back_collected,
                m.front_collected,
                m.back_exited,
                m.front_exited,
                m.capped
            )
            .unwrap(),
            None => writeln!(s, "{parameter},{},,,,,,,\"{err}\"", r.value).unwrap(),
        }
    }
    s
}

/// Ratio and back-collected power against the swept value.
pub fn sweep_svg(parameter: &str, rows: &[SweepRow]) -> String {
    let ratio: Vec<(f64, f64)> = rows.iter().filter_map(|r| Some((r.value, r.metrics.as_ref()?.ratio?))).collect();
    let back: Vec<(f64, f64)> =
        rows.iter().filter_map(|r| Some((r.value, r.metrics.as_ref()?.back_collected))).collect();
    let xs = rows.iter().map(|r| r.value);
    let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let (x0, x1) = if x0 < x1 { (x0, x1) } else { (x0 - 0.5, x0 + 0.5) };
    let ymax = ratio.iter().map(|p| p.1).fold(1.0, f64::max) * 1.05;
    let f = Frame { x0, x1, y0: 0.0, y1: ymax };
    let mut s = svg_open();
    let xticks: Vec<f64> = (0..=5).map(|i| x0 + (x1 - x0) * i as f64 / 5.0).collect();
    let yticks: Vec<f64> = (0..=5).map(|i| ymax * i as f64 / 5.0).collect();
    f.axes(&mut s, parameter, "back/front ratio", &xticks, &yticks);
    f.polyline(&mut s, &ratio, "#1f77b4", None);
    // back-collected power drawn on the same axes, scaled to the ratio range
    let scaled: Vec<(f64, f64)> = back.iter().map(|(x, y)| (*x, y * ymax)).collect();
    f.polyline(&mut s, &scaled, "#2ca02c", Some("4 3"));
    legend(&mut s, &[("ratio", "#1f77b4", None), ("back collected (x full scale)", "#2ca02c", Some("4 3"))]);
    s.push_str("</svg>\n");
    s
}
