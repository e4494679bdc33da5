use super::trace::QueryTrace;
use crate::dataset::UserId;

/// MAE@k(u) over the user's test queries; `None` without any.
pub fn mae_at_k(trace: &QueryTrace, user: UserId) -> Option<f64> {
    let stream = trace.stream(user);
    if stream.is_empty() {
        return None;
    }
    Some(stream.iter().map(|e| (e.truth - e.prediction).abs()).sum::<f64>() / stream.len() as f64)
}

/// Mean of the per-user MAEs of every traced user.
pub fn mean_mae(trace: &QueryTrace) -> Option<f64> {
    super::mean(trace.users().filter_map(|u| mae_at_k(trace, u)))
}
