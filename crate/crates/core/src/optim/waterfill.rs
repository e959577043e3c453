use crate::error::{Error, Result};

/// Water-filling powers `p_d = max(0, mu - 1/g_d)` with `sum p_d = total_power`.
///
/// The water level is found exactly by sorting: channels are activated from
/// the strongest down while the candidate level stays above the next
/// channel's floor `1/g_d`.
pub fn waterfill(channel_power_gains: &[f64], total_power: f64) -> Result<Vec<f64>> {
    if channel_power_gains.is_empty() {
        return Err(Error::InvalidArgument("water-filling needs at least one channel".into()));
    }
    if channel_power_gains.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
        return Err(Error::InvalidArgument(
            "channel power gains must be finite and strictly positive".into(),
        ));
    }
    if !(total_power.is_finite() && total_power > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "total power must be positive, got {total_power}"
        )));
    }

    let mut floors: Vec<f64> = channel_power_gains.iter().map(|g| 1.0 / g).collect();
    floors.sort_by(f64::total_cmp);

    let mut level = total_power + floors[0];
    let mut sum = floors[0];
    for (k, &floor) in floors.iter().enumerate().skip(1) {
        if floor >= level {
            break;
        }
        sum += floor;
        level = (total_power + sum) / (k + 1) as f64;
    }
    Ok(channel_power_gains
        .iter()
        .map(|g| (level - 1.0 / g).max(0.0))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_and_single() {
        assert_eq!(waterfill(&[3.0, 3.0], 2.0).unwrap(), vec![1.0, 1.0]);
        assert_eq!(waterfill(&[1.0], 5.0).unwrap(), vec![5.0]);
    }

    #[test]
    fn weak_channel_left_dry() {
        let p = waterfill(&[1.0, 0.5], 1.0).unwrap();
        assert_eq!(p, vec![1.0, 0.0]);
        // grid oracle over p1 in [0, 1]
        let f = |p1: f64| (1.0 + p1).log2() + (1.0 + 0.5 * (1.0 - p1)).log2();
        let best = (0..=10_000)
            .map(|i| i as f64 * 1e-4)
            .max_by(|a, b| f(*a).total_cmp(&f(*b)))
            .unwrap();
        assert!((best - 1.0).abs() < 1e-4);
    }

    #[test]
    fn unsorted_input_keeps_order() {
        let p = waterfill(&[0.5, 4.0, 1.0], 2.0).unwrap();
        assert!(p[1] > p[2] && p[2] > p[0] || p[0] == 0.0);
        assert!((p.iter().sum::<f64>() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(waterfill(&[], 1.0).is_err());
        assert!(waterfill(&[1.0, 0.0], 1.0).is_err());
        assert!(waterfill(&[1.0], 0.0).is_err());
    }
}
