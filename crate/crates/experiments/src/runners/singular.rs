//! Accuracy of the leading singular functions, plain versus FCOSE.
//!
//! The reference pair `(f*, g*)` is the leading singular pair of the proxy
//! operator. Each repetition's functions are sign-aligned to it and scored
//! by the squared RKHS distance. A repetition whose operator has rank 0
//! yields NaN rows, which the summary counts as skipped.

use kshrink::operators::{align_sign, rkhs_diff_norm_sq, singular_spectrum, EmpiricalOperator, FeatureExpansion, Side};
use kshrink::shrinkage::{apply_shrinkage, fcose_fit, LambdaGrid};

use super::{draw, per_rep, proxy_groups};
use crate::config::ExperimentConfig;
use crate::error::{AppError, AppResult};
use crate::table::{ResultTable, Row};

fn leading_pair(op: &EmpiricalOperator) -> AppResult<Option<(FeatureExpansion, FeatureExpansion)>> {
    let d = singular_spectrum(op, 1)?;
    if d.rank() == 0 {
        return Ok(None);
    }
    Ok(Some((d.function(op, 0, Side::Left), d.function(op, 0, Side::Right))))
}

pub(super) fn run(cfg: &ExperimentConfig, table: &mut ResultTable) -> AppResult<()> {
    for (proxy, cells) in proxy_groups(cfg)? {
        let (f_ref, g_ref) = leading_pair(&proxy.operator)?
            .ok_or_else(|| AppError::Runtime("proxy operator has rank 0; no reference singular functions".into()))?;
        for p in cells {
            let rows = per_rep(cfg.repetitions, |rep| {
                let (x, y) = draw(cfg, p, rep)?;
                let plain = proxy.plain(x, y)?;
                let g = plain.gram_pair()?;
                let grid = LambdaGrid::Auto(cfg.lambda_grid_points).resolve(&g)?;
                let fcose = apply_shrinkage(&plain, &fcose_fit(&g, &grid)?)?;
                let mut rows = Vec::with_capacity(4);
                for (name, op) in [("plain", &plain), ("fcose", &fcose)] {
                    let (mse_f, mse_g) = match leading_pair(op)? {
                        Some((f, gf)) => (
                            rkhs_diff_norm_sq(&align_sign(&f, &f_ref)?, &f_ref)?,
                            rkhs_diff_norm_sq(&align_sign(&gf, &g_ref)?, &g_ref)?,
                        ),
                        None => (f64::NAN, f64::NAN),
                    };
                    rows.push(Row::new(name, p.n, p.value, rep, "mse_f", mse_f));
                    rows.push(Row::new(name, p.n, p.value, rep, "mse_g", mse_g));
                }
                Ok(rows)
            })?;
            table.rows.extend(rows);
        }
    }
    Ok(())
}
