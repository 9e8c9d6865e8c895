use std::path::{Path, PathBuf};

use super::{Dendrogram, ShapMatrix};
use crate::error::{Error, Result};
use crate::svg::Svg;

const NEGATIVE: (f64, f64, f64) = (59.0, 76.0, 192.0);
const POSITIVE: (f64, f64, f64) = (180.0, 4.0, 38.0);
const ID_COLOR: &str = "#4d9221";
const OOD_COLOR: &str = "#c51b7d";

/// 99th percentile (nearest rank) of |value|.
pub fn color_limit(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let rank = (0.99 * abs.len() as f64).ceil() as usize;
    abs[rank.clamp(1, abs.len()) - 1]
}

/// Blue-white-red color of `value` on a scale clipped at `±limit`.
pub fn diverging_color(value: f64, limit: f64) -> String {
    let t = if limit > 0.0 {
        (value / limit).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    let end = if t < 0.0 { NEGATIVE } else { POSITIVE };
    let a = t.abs();
    let mix = |c: f64| (255.0 + (c - 255.0) * a).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(end.0), mix(end.1), mix(end.2))
}

pub struct HeatmapFiles {
    pub svg: PathBuf,
    pub csv: PathBuf,
}

fn check_order(d: &Dendrogram, n: usize, axis: &str) -> Result<()> {
    let mut seen = vec![false; n];
    let ok = d.n_leaves == n
        && d.leaf_order.len() == n
        && d.leaf_order.iter().all(|&i| i < n && !std::mem::replace(&mut seen[i], true));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{axis} dendrogram has {} leaves but the matrix has {n} {axis}s",
            d.n_leaves
        )))
    }
}

/// Writes `<path>` as an SVG heatmap and the reordered matrix next to it
/// with a `.csv` extension. Rows and columns follow the dendrogram leaf
/// orders; the first column is the ID/OOD flag.
pub fn heatmap_export(
    shap: &ShapMatrix,
    rows: &Dendrogram,
    cols: &Dendrogram,
    path: &Path,
) -> Result<HeatmapFiles> {
    let (n, m) = (shap.n_rows(), shap.n_cols());
    check_order(rows, n, "row")?;
    check_order(cols, m, "column")?;

    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["row_id".to_string(), "ood".to_string()];
    header.extend(cols.leaf_order.iter().map(|&j| shap.feature_names[j].clone()));
    wtr.write_record(&header)?;
    for &i in &rows.leaf_order {
        let mut rec = vec![shap.row_ids[i].to_string(), (shap.ood_flags[i] as u8).to_string()];
        rec.extend(cols.leaf_order.iter().map(|&j| shap.values[i][j].to_string()));
        wtr.write_record(&rec)?;
    }
    let csv_bytes = wtr
        .into_inner()
        .map_err(|e| Error::InvalidArgument(format!("csv buffer: {e}")))?;

    let limit = color_limit(&shap.values.iter().flatten().copied().collect::<Vec<_>>());
    let cell_w = 18.0;
    let cell_h = (600.0 / n.max(1) as f64).clamp(0.15, 14.0);
    let (left, top) = (40.0, 120.0);
    let flag_w = 12.0;
    let grid_left = left + flag_w + 4.0;
    let width = grid_left + cell_w * m as f64 + 120.0;
    let height = top + cell_h * n as f64 + 40.0;
    let mut svg = Svg::new(width.ceil(), height.ceil());
    svg.text(left, 24.0, 14.0, "start", "SHAP values (log-odds)");
    svg.text(left + flag_w / 2.0, top - 6.0, 10.0, "middle", "OOD");
    for (c, &j) in cols.leaf_order.iter().enumerate() {
        let x = grid_left + cell_w * (c as f64 + 0.5);
        svg.text(x, top - 6.0, 9.0, "start", &shap.feature_names[j]);
    }
    for (r, &i) in rows.leaf_order.iter().enumerate() {
        let y = top + cell_h * r as f64;
        let flag = if shap.ood_flags[i] { OOD_COLOR } else { ID_COLOR };
        svg.rect(left, y, flag_w, cell_h, flag);
        for (c, &j) in cols.leaf_order.iter().enumerate() {
            let x = grid_left + cell_w * c as f64;
            svg.rect(x, y, cell_w, cell_h, &diverging_color(shap.values[i][j], limit));
        }
    }
    let legend_x = grid_left + cell_w * m as f64 + 20.0;
    for k in 0..=10 {
        let v = limit * (1.0 - k as f64 / 5.0);
        svg.rect(legend_x, top + 12.0 * k as f64, 14.0, 12.0, &diverging_color(v, limit));
    }
    svg.text(legend_x + 18.0, top + 10.0, 10.0, "start", &format!("{limit:.3}"));
    svg.text(legend_x + 18.0, top + 130.0, 10.0, "start", &format!("{:.3}", -limit));

    let csv_path = path.with_extension("csv");
    std::fs::write(path, svg.finish()).map_err(|e| Error::io(path, e))?;
    std::fs::write(&csv_path, csv_bytes).map_err(|e| Error::io(&csv_path, e))?;
    Ok(HeatmapFiles {
        svg: path.to_path_buf(),
        csv: csv_path,
    })
}
