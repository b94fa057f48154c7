//! Leading singular values of the plain and LW-shrunk operators per sample size.
//!
//! Items `1..=top_k` hold the sorted singular values (zero-padded past the
//! rank). The proxy sample is reported once, as repetition 0 at `n = proxy_n`.

use kshrink::operators::{singular_spectrum, EmpiricalOperator};
use kshrink::shrinkage::rho_lw;

use super::{draw, per_rep, proxy_groups};
use crate::config::ExperimentConfig;
use crate::error::AppResult;
use crate::table::{ResultTable, Row};

fn spectrum_rows(op: &EmpiricalOperator, top_k: usize, sweep: f64, rep: usize) -> AppResult<Vec<Row>> {
    let n = op.n();
    let k = top_k.min(n);
    let values = singular_spectrum(op, k)?.padded_values(top_k);
    let rho = rho_lw(&op.gram_pair()?).rho.expect("LW carries rho");
    let mut rows = Vec::with_capacity(2 * top_k + 1);
    for (i, s) in values.iter().enumerate() {
        rows.push(Row::new("plain", n, sweep, rep, "singular_value", *s).with_item(i + 1));
        rows.push(Row::new("lw", n, sweep, rep, "singular_value", (1.0 - rho) * s).with_item(i + 1));
    }
    rows.push(Row::new("lw", n, sweep, rep, "rho", rho));
    Ok(rows)
}

pub(super) fn run(cfg: &ExperimentConfig, table: &mut ResultTable) -> AppResult<()> {
    for (proxy, cells) in proxy_groups(cfg)? {
        for &p in &cells {
            let rows = per_rep(cfg.repetitions, |rep| {
                let (x, y) = draw(cfg, p, rep)?;
                spectrum_rows(&proxy.plain(x, y)?, cfg.top_k, p.value, rep)
            })?;
            table.rows.extend(rows);
        }
        let sweep = if cfg.sweep == crate::config::SweepParam::N { cfg.proxy_n as f64 } else { cells[0].value };
        table.rows.extend(spectrum_rows(&proxy.operator, cfg.top_k, sweep, 0)?);
    }
    Ok(())
}
