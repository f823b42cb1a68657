//! Central finite-difference verification of analytic parameter gradients.

use crate::error::Result;
use crate::numerics::{Graph, ParamSet, Var};

/// Denominator floor for the relative error, so gradients that are zero up to
/// rounding are compared absolutely.
pub const RELATIVE_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_relative_error: f64,
    /// Parameter name and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

/// Analytic gradient of `loss` for every parameter array, in declaration order.
pub fn analytic_gradients<F>(params: &ParamSet, loss: &F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    let mut graph = Graph::new();
    let vars = params.register(&mut graph);
    let l = loss(&mut graph, &vars)?;
    graph.backward(l)?;
    Ok(params
        .iter()
        .zip(&vars)
        .map(|((_, t), &v)| {
            graph
                .grad(v)
                .map_or_else(|| vec![0.0; t.len()], <[f64]>::to_vec)
        })
        .collect())
}

fn evaluate<F>(params: &ParamSet, loss: &F) -> Result<f64>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    let mut graph = Graph::new();
    let vars = params.register_frozen(&mut graph);
    let l = loss(&mut graph, &vars)?;
    Ok(graph.value(l).item())
}

/// Compares every scalar parameter's analytic gradient against
/// `(L(p + h) - L(p - h)) / 2h`.
pub fn check<F>(params: &ParamSet, loss: F, step: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    let analytic = analytic_gradients(params, &loss)?;
    let mut probe = params.clone();
    let mut report = GradCheckReport {
        checked: 0,
        max_relative_error: 0.0,
        worst: None,
    };
    let names: Vec<String> = params.iter().map(|(n, _)| n.to_string()).collect();
    for (slot, name) in names.iter().enumerate() {
        let len = analytic[slot].len();
        for n in 0..len {
            let original = probe.get(name).expect("declared parameter").data()[n];
            probe.get_mut(name).expect("declared parameter").data_mut()[n] = original + step;
            let plus = evaluate(&probe, &loss)?;
            probe.get_mut(name).expect("declared parameter").data_mut()[n] = original - step;
            let minus = evaluate(&probe, &loss)?;
            probe.get_mut(name).expect("declared parameter").data_mut()[n] = original;

            let numeric = (plus - minus) / (2.0 * step);
            let err = relative_error(analytic[slot][n], numeric);
            report.checked += 1;
            if err > report.max_relative_error || report.worst.is_none() {
                report.max_relative_error = err.max(report.max_relative_error);
                report.worst = Some((name.clone(), n));
            }
        }
    }
    Ok(report)
}
