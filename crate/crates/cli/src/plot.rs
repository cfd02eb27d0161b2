//! `valleyjump plot`: heatmap CSVs become heatmaps, anything else a curve.

use std::fs;
use std::path::PathBuf;

use clap::Args;

use crate::svg;

#[derive(Args)]
pub struct PlotArgs {
    /// CSV written by `sweep`, `theory` or `simulate`.
    input: PathBuf,
    /// Output path (default: the input with an `.svg` extension).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Heatmap column to colour by.
    #[arg(long, default_value = "p_flat")]
    value: String,
    /// Curve abscissa column (default depends on the table).
    #[arg(long)]
    x: Option<String>,
    /// Curve ordinate column (default depends on the table).
    #[arg(long)]
    y: Option<String>,
    /// Logarithmic abscissa (default on for `delta_s`).
    #[arg(long)]
    log_x: Option<bool>,
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &PathBuf) -> Result<Self, String> {
        let mut r = csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let header = r.headers().map_err(|e| e.to_string())?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<Result<_, _>>()
            .map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(Table { header, rows })
    }

    fn column(&self, name: &str) -> Result<Vec<f64>, String> {
        let i = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| format!("no column '{name}' (have {})", self.header.join(",")))?;
        self.rows
            .iter()
            .map(|r| {
                r[i].parse::<f64>()
                    .map_err(|_| format!("column '{name}': not a number: '{}'", r[i]))
            })
            .collect()
    }

    fn has(&self, name: &str) -> bool {
        self.header.iter().any(|h| h == name)
    }
}

fn unique_sorted(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(f64::total_cmp);
    u.dedup();
    u
}

pub fn run(a: PlotArgs) -> Result<(), String> {
    let t = Table::read(&a.input)?;
    let rendered = if t.has("eta") && t.has("sigma") {
        let (eta, sigma, value) = (t.column("eta")?, t.column("sigma")?, t.column(&a.value)?);
        let divergent: Vec<bool> = if t.has("n_diverged") && t.has("n_runs") {
            let (d, n) = (t.column("n_diverged")?, t.column("n_runs")?);
            d.iter().zip(&n).map(|(d, n)| 2.0 * d > *n).collect()
        } else {
            vec![false; eta.len()]
        };
        let rows = unique_sorted(&eta);
        let cols = unique_sorted(&sigma);
        let mut values = vec![None; rows.len() * cols.len()];
        for k in 0..eta.len() {
            let i = rows.partition_point(|&r| r < eta[k]);
            let j = cols.partition_point(|&c| c < sigma[k]);
            values[i * cols.len() + j] = (!divergent[k]).then_some(value[k]);
        }
        svg::heatmap(&svg::Heatmap {
            title: &a.value,
            rows: &rows,
            row_label: "eta",
            cols: &cols,
            col_label: "sigma",
            values: &values,
        })
    } else {
        let (dx, dy) = if t.has("p_flat_tr") {
            ("delta_s", "p_flat_tr")
        } else if t.has("p_flat_ss") {
            ("y", "p_flat_ss")
        } else if t.has("loss") {
            ("t", "y")
        } else {
            return Err("cannot infer columns; pass --x and --y".into());
        };
        let xn = a.x.as_deref().unwrap_or(dx);
        let yn = a.y.as_deref().unwrap_or(dy);
        let (xs, ys) = (t.column(xn)?, t.column(yn)?);
        svg::curve(&svg::Curve {
            title: yn,
            x_label: xn,
            y_label: yn,
            xs: &xs,
            ys: &ys,
            log_x: a.log_x.unwrap_or(xn == "delta_s"),
        })
    };
    let out = a.out.unwrap_or_else(|| a.input.with_extension("svg"));
    fs::write(&out, rendered).map_err(|e| format!("{}: {e}", out.display()))
}
