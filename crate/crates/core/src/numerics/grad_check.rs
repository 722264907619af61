use super::{ParamId, ParamStore, Tape, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Worst disagreement between tape and finite-difference gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter and flat index where the worst disagreement occurred.
    pub worst: Option<(String, usize)>,
    pub coordinates: usize,
}

/// Compares the tape gradient of `f` at `point` against central differences.
///
/// Per coordinate the error is `|g_tape − g_fd| / max(1, |g_tape|, |g_fd|)`;
/// the report carries the maximum over every coordinate of every parameter.
pub fn grad_check<T, F>(f: F, point: &ParamStore<T>, epsilon: f64) -> Result<GradCheckReport>
where
    T: Scalar,
    F: Fn(&mut Tape<T>, &ParamStore<T>) -> Result<Var>,
{
    if !(1e-5..=1e-3).contains(&epsilon) {
        return Err(Error::InvalidInput(format!("epsilon {epsilon} outside [1e-5, 1e-3]")));
    }
    let eval = |store: &ParamStore<T>| -> Result<f64> {
        let mut tape = Tape::new();
        let out = f(&mut tape, store)?;
        let v = tape.scalar(out).widen();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numeric("non-finite objective during finite differences".into()))
        }
    };

    let mut tape = Tape::new();
    let out = f(&mut tape, point)?;
    let grads = tape.backward(out)?;

    let mut probe = point.clone();
    let mut report = GradCheckReport { max_rel_error: 0.0, worst: None, coordinates: 0 };
    for id in point.ids() {
        for k in 0..point.get(id).data().len() {
            let fd = central_difference(&mut probe, id, k, epsilon, &eval)?;
            let g = grads.get(id).map_or(0.0, |g| g.data()[k].widen());
            let rel = (g - fd).abs() / 1f64.max(g.abs()).max(fd.abs());
            report.coordinates += 1;
            if rel > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = rel;
                report.worst = Some((point.name(id).to_string(), k));
            }
        }
    }
    Ok(report)
}

fn central_difference<T: Scalar>(
    probe: &mut ParamStore<T>,
    id: ParamId,
    k: usize,
    eps: f64,
    eval: &impl Fn(&ParamStore<T>) -> Result<f64>,
) -> Result<f64> {
    let orig = probe.get(id).data()[k];
    let plus = T::narrow(orig.widen() + eps);
    let minus = T::narrow(orig.widen() - eps);
    probe.get_mut(id).data_mut()[k] = plus;
    let fp = eval(probe)?;
    probe.get_mut(id).data_mut()[k] = minus;
    let fm = eval(probe)?;
    probe.get_mut(id).data_mut()[k] = orig;
    Ok((fp - fm) / (plus.widen() - minus.widen()))
}
