use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::svg::{bar_chart, Series};
use super::{BusRole, ImpactError, ImpactReport, LineClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Svg,
}

impl std::str::FromStr for ReportFormat {
    type Err = ImpactError;

    fn from_str(s: &str) -> Result<Self, ImpactError> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "svg" => Ok(ReportFormat::Svg),
            _ => Err(ImpactError::UnknownFormat(s.to_string())),
        }
    }
}

/// A named output document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub content: String,
}

pub fn render_report(report: &ImpactReport, format: ReportFormat) -> Result<Vec<Artifact>, ImpactError> {
    render_reports(std::slice::from_ref(report), format)
}

/// Render several reports of the same base case side by side. The
/// "before" column comes from the first report.
pub fn render_reports(reports: &[ImpactReport], format: ReportFormat) -> Result<Vec<Artifact>, ImpactError> {
    if reports.is_empty() {
        return Err(ImpactError::Empty);
    }
    let tags = report_tags(reports);
    Ok(match format {
        ReportFormat::Json => reports
            .iter()
            .zip(&tags)
            .map(|(r, tag)| Artifact {
                name: format!("impact_{tag}.json"),
                content: r.to_json() + "\n",
            })
            .collect(),
        ReportFormat::Csv => vec![
            Artifact {
                name: "voltages.csv".into(),
                content: voltages_csv(reports, &tags),
            },
            Artifact {
                name: "injections.csv".into(),
                content: injections_csv(reports, &tags),
            },
            Artifact {
                name: "flows.csv".into(),
                content: flows_csv(reports, &tags),
            },
        ],
        ReportFormat::Svg => svg_charts(reports, &tags),
    })
}

/// Column tags: the attack mode, or "attacked"; repeats get a suffix.
fn report_tags(reports: &[ImpactReport]) -> Vec<String> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    reports
        .iter()
        .map(|r| {
            let name = r.mode.map(|m| m.name().to_string()).unwrap_or_else(|| "attacked".into());
            let n = seen.entry(name.clone()).or_insert(0);
            *n += 1;
            if *n == 1 {
                name
            } else {
                format!("{name}_{n}")
            }
        })
        .collect()
}

fn num(v: f64) -> String {
    let s = format!("{v:.6}");
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => s,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn role_name(r: BusRole) -> &'static str {
    match r {
        BusRole::Interior => "interior",
        BusRole::Boundary => "boundary",
        BusRole::Exterior => "exterior",
    }
}

fn class_name(c: LineClass) -> &'static str {
    match c {
        LineClass::Interior => "interior",
        LineClass::Frozen => "frozen",
        LineClass::Tie => "tie",
        LineClass::Exterior => "exterior",
    }
}

fn write_csv(header: Vec<String>, rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

fn zone_buses(reports: &[ImpactReport]) -> BTreeMap<u32, BusRole> {
    reports
        .iter()
        .flat_map(|r| r.deviations.iter().map(|d| (d.bus, d.role)))
        .collect()
}

fn voltages_csv(reports: &[ImpactReport], tags: &[String]) -> String {
    let mut header = vec!["bus".into(), "role".into(), "vm_before_pu".into(), "va_before_deg".into()];
    for t in tags {
        header.push(format!("vm_{t}_pu"));
        header.push(format!("va_{t}_deg"));
    }
    let rows = zone_buses(reports)
        .into_iter()
        .map(|(bus, role)| {
            let before = reports.iter().flat_map(|r| &r.deviations).find(|d| d.bus == bus);
            let mut row = vec![
                bus.to_string(),
                role_name(role).into(),
                opt(before.map(|d| d.vm_base)),
                opt(before.map(|d| d.va_base_deg)),
            ];
            for r in reports {
                let d = r.deviations.iter().find(|d| d.bus == bus);
                row.push(opt(d.map(|d| d.vm_attacked)));
                row.push(opt(d.map(|d| d.va_attacked_deg)));
            }
            row
        })
        .collect();
    write_csv(header, rows)
}

fn injections_csv(reports: &[ImpactReport], tags: &[String]) -> String {
    let mut header = vec!["bus".into(), "role".into(), "p_before_pu".into(), "q_before_pu".into()];
    for t in tags {
        header.push(format!("p_{t}_pu"));
        header.push(format!("q_{t}_pu"));
    }
    let rows = zone_buses(reports)
        .into_iter()
        .map(|(bus, role)| {
            let before = reports[0].bus(bus);
            let mut row = vec![
                bus.to_string(),
                role_name(role).into(),
                opt(before.map(|b| b.base_p)),
                opt(before.map(|b| b.base_q)),
            ];
            for r in reports {
                let b = r.bus(bus);
                row.push(opt(b.map(|b| b.attacked_p)));
                row.push(opt(b.map(|b| b.attacked_q)));
            }
            row
        })
        .collect();
    write_csv(header, rows)
}

fn flows_csv(reports: &[ImpactReport], tags: &[String]) -> String {
    let mut header: Vec<String> = ["from", "to", "label", "class", "pf_before_pu", "qf_before_pu", "loading_before_pct"]
        .into_iter()
        .map(String::from)
        .collect();
    for t in tags {
        header.push(format!("pf_{t}_pu"));
        header.push(format!("qf_{t}_pu"));
        header.push(format!("loading_{t}_pct"));
    }
    let rows = reports[0]
        .branches
        .iter()
        .map(|b| {
            let mut row = vec![
                b.from.to_string(),
                b.to.to_string(),
                b.label.clone(),
                class_name(b.class).into(),
                num(b.base.pf),
                num(b.base.qf),
                opt(b.loading_base),
            ];
            for r in reports {
                let a = r.branches.iter().find(|x| x.branch == b.branch);
                row.push(opt(a.map(|a| a.attacked.pf)));
                row.push(opt(a.map(|a| a.attacked.qf)));
                row.push(opt(a.and_then(|a| a.loading_attacked)));
            }
            row
        })
        .collect();
    write_csv(header, rows)
}

fn state_label(bus: u32, var: &str) -> String {
    match var {
        "vm" => format!("V{bus}"),
        _ => format!("θ{bus}"),
    }
}

fn svg_charts(reports: &[ImpactReport], tags: &[String]) -> Vec<Artifact> {
    let ids: BTreeSet<&String> = reports.iter().flat_map(|r| r.deltas.keys()).collect();
    let delta_cats: Vec<String> = ids.iter().map(|s| s.to_string()).collect();
    let delta_series: Vec<Series> = reports
        .iter()
        .zip(tags)
        .map(|(r, t)| Series {
            name: t.clone(),
            values: delta_cats.iter().map(|id| Some(r.deltas.get(id).copied().unwrap_or(0.0))).collect(),
        })
        .collect();

    let state_keys: BTreeSet<(u32, String)> = reports
        .iter()
        .flat_map(|r| r.residuals.bars.iter().map(|b| (b.bus, b.var.clone())))
        .collect();
    let state_cats: Vec<String> = state_keys.iter().map(|(b, v)| state_label(*b, v)).collect();
    let per_state = |f: &dyn Fn(&super::StateBar) -> Option<f64>| -> Vec<Series> {
        reports
            .iter()
            .zip(tags)
            .map(|(r, t)| Series {
                name: t.clone(),
                values: state_keys
                    .iter()
                    .map(|(bus, var)| r.residuals.bars.iter().find(|b| b.bus == *bus && &b.var == var).and_then(f))
                    .collect(),
            })
            .collect()
    };

    let lines: Vec<&super::BranchImpact> = reports[0]
        .branches
        .iter()
        .filter(|b| b.class != LineClass::Exterior)
        .collect();
    let line_cats: Vec<String> = lines.iter().map(|b| b.label.clone()).collect();
    let mut loading_series = vec![Series {
        name: "before".into(),
        values: lines.iter().map(|b| b.loading_base).collect(),
    }];
    for (r, t) in reports.iter().zip(tags) {
        loading_series.push(Series {
            name: t.clone(),
            values: lines
                .iter()
                .map(|b| r.branches.iter().find(|x| x.branch == b.branch).and_then(|x| x.loading_attacked))
                .collect(),
        });
    }

    vec![
        Artifact {
            name: "attack_vector.svg".into(),
            content: bar_chart("Attack vector components", "p.u. or rad", &delta_cats, &delta_series),
        },
        Artifact {
            name: "residual_change.svg".into(),
            content: bar_chart(
                "Change of state-measurement residuals",
                "p.u. or rad",
                &state_cats,
                &per_state(&|b| b.residual_change),
            ),
        },
        Artifact {
            name: "estimate_deviation.svg".into(),
            content: bar_chart(
                "Estimated state minus base state",
                "p.u. or rad",
                &state_cats,
                &per_state(&|b| Some(b.estimate_deviation)),
            ),
        },
        Artifact {
            name: "loading.svg".into(),
            content: bar_chart("Line loading", "percent of rating", &line_cats, &loading_series),
        },
    ]
}
