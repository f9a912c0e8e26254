/// Per-type utility of one round. `submitted == false` is the backoff branch.
/// The `1[p=0]·v` term is applied literally, including to losing bids.
pub fn utility_per_type(won: bool, v: f64, p: f64, c: f64, q: f64, submitted: bool) -> f64 {
    if !submitted {
        return q;
    }
    let gain = if won { v - p } else { -c };
    if p == 0.0 {
        gain - v
    } else {
        gain
    }
}

pub fn utility_total(per_type: &[f64], beta: f64, w: f64) -> f64 {
    per_type.iter().sum::<f64>() + w * (1.0 - beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_type_examples() {
        assert_eq!(utility_per_type(true, 10.0, 4.0, 1.0, 0.1, true), 6.0);
        assert_eq!(utility_per_type(false, 10.0, 3.0, 1.0, 0.1, true), -1.0);
        assert_eq!(utility_per_type(false, 10.0, 3.0, 1.0, 0.5, false), 0.5);
        assert_eq!(utility_per_type(true, 10.0, 0.0, 1.0, 0.1, true), 0.0);
    }

    #[test]
    fn total_examples() {
        assert_eq!(utility_total(&[1.5, 0.5], 0.25, 1.0), 2.75);
        assert_eq!(utility_total(&[1.5, 0.5], 0.25, 0.0), 2.0);
        assert_eq!(utility_total(&[2.0], 1.0, 1.0), 2.0);
    }
}
