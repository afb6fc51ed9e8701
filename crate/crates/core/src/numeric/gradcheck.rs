use crate::error::{Error, Result};
use crate::numeric::params::ParamSet;

/// Location and size of the worst disagreement found by [`grad_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub entries_checked: usize,
}

/// Compares `analytic` against central differences of `loss_fn`.
///
/// Relative error per entry is `|a - n| / max(|a|, |n|, 1e-8)`. Every entry
/// of every parameter is probed, so keep models tiny.
pub fn grad_check<F>(mut loss_fn: F, params: &ParamSet, analytic: &ParamSet, eps: f64) -> Result<GradCheckReport>
where
    F: FnMut(&ParamSet) -> Result<f64>,
{
    if !(1e-6..=1e-4).contains(&eps) {
        return Err(Error::Config(format!("finite-difference step {eps} outside [1e-6, 1e-4]")));
    }
    params.check_compatible(analytic)?;

    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        entries_checked: 0,
    };
    for (pi, p) in params.iter().enumerate() {
        let a_grad = analytic.iter().nth(pi).expect("checked compatible");
        for j in 0..p.value.len() {
            let orig = p.value.data()[j];
            let mut eval = |v: f64, probe: &mut ParamSet| -> Result<f64> {
                probe.iter_mut().nth(pi).expect("same layout").value.data_mut()[j] = v;
                let l = loss_fn(probe)?;
                if !l.is_finite() {
                    return Err(Error::NonFinite(format!("loss while probing {}[{j}]", p.name)));
                }
                Ok(l)
            };
            let plus = eval(orig + eps, &mut probe)?;
            let minus = eval(orig - eps, &mut probe)?;
            probe.iter_mut().nth(pi).expect("same layout").value.data_mut()[j] = orig;

            let numeric = (plus - minus) / (2.0 * eps);
            let a = a_grad.value.data()[j];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            report.entries_checked += 1;
            if rel > report.max_rel_error || report.worst_param.is_empty() {
                report.max_rel_error = rel;
                report.worst_param = p.name.clone();
                report.worst_index = j;
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    Ok(report)
}
