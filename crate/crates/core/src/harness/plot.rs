use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::harness::sweep::{finish, fmt_opt, SweepTable};

/// Splits a table into one `n,value,lower,upper` series per quantity,
/// sorted by quantity and then by `n`. Skipped rows are left out.
pub fn plot_series(table: &SweepTable) -> Result<BTreeMap<String, String>> {
    let mut grouped: BTreeMap<&str, Vec<_>> = BTreeMap::new();
    for r in table.rows.iter().filter(|r| !r.is_skipped()) {
        grouped.entry(&r.quantity).or_default().push(r);
    }
    let mut out = BTreeMap::new();
    for (quantity, mut rows) in grouped {
        rows.sort_by_key(|r| r.n);
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["n", "value", "lower", "upper"])?;
        for r in rows {
            w.write_record([r.n.to_string(), fmt_opt(r.value), fmt_opt(r.lower), fmt_opt(r.upper)])?;
        }
        out.insert(quantity.to_string(), finish(w)?);
    }
    Ok(out)
}

/// Writes `sweep.csv`, `sweep.json` and `plot/<quantity>.csv` under `dir`.
pub fn write_outputs(table: &SweepTable, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir.join("plot"))?;
    let mut written = Vec::new();
    let csv_path = dir.join("sweep.csv");
    std::fs::write(&csv_path, table.to_csv()?)?;
    written.push(csv_path);
    let json_path = dir.join("sweep.json");
    std::fs::write(&json_path, serde_json::to_string_pretty(table)? + "\n")?;
    written.push(json_path);
    for (quantity, body) in plot_series(table)? {
        let path = dir.join("plot").join(format!("{quantity}.csv"));
        std::fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}
