//! Bob's CHSH estimate from recorded test rounds.

use super::AnalysisError;
use crate::protocol::RoundRecord;

fn indicator_sign(record: &RoundRecord) -> Result<i64, AnalysisError> {
    let s0 = record.s0.ok_or(AnalysisError::IncompleteRecord("s0"))?;
    let s1 = record.s1.ok_or(AnalysisError::IncompleteRecord("s1"))?;
    let r0 = record.r0.ok_or(AnalysisError::IncompleteRecord("r0"))?;
    let r1 = record.r1.ok_or(AnalysisError::IncompleteRecord("r1"))?;
    if s0 > 1 || s1 > 1 {
        return Err(AnalysisError::NonBinaryInput(s0, s1));
    }
    let parity = r0.as_u8() ^ r1.as_u8() ^ (s0 & s1);
    Ok(if parity == 0 { 1 } else { -1 })
}

/// `I(w) = 4·(−1)^{r0 ⊕ r1 ⊕ s0·s1}`.
pub fn chsh_indicator(record: &RoundRecord) -> Result<f64, AnalysisError> {
    Ok(4.0 * indicator_sign(record)? as f64)
}

/// Mean of [`chsh_indicator`] over the rounds.
///
/// Summed in integers and divided once, so the result depends only on the
/// multiset of rounds and is reproducible bit for bit.
pub fn running_violation(rounds: &[RoundRecord]) -> Result<f64, AnalysisError> {
    if rounds.is_empty() {
        return Err(AnalysisError::NoRounds);
    }
    let mut sum = 0i64;
    for r in rounds {
        sum += indicator_sign(r)?;
    }
    Ok(4.0 * sum as f64 / rounds.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::Bit;

    fn rec(s0: u8, s1: u8, r0: u8, r1: u8) -> RoundRecord {
        RoundRecord::full(s0, s1, Bit::try_from(r0).unwrap(), Bit::try_from(r1).unwrap())
    }

    #[test]
    fn indicator_values() {
        assert_eq!(chsh_indicator(&rec(0, 0, 0, 0)).unwrap(), 4.0);
        assert_eq!(chsh_indicator(&rec(1, 1, 0, 1)).unwrap(), 4.0);
        assert_eq!(chsh_indicator(&rec(1, 1, 0, 0)).unwrap(), -4.0);
        assert_eq!(chsh_indicator(&rec(0, 1, 1, 0)).unwrap(), -4.0);
    }

    #[test]
    fn indicator_rejects_bad_records() {
        let mut r = rec(0, 0, 0, 0);
        r.r1 = None;
        assert_eq!(chsh_indicator(&r), Err(AnalysisError::IncompleteRecord("r1")));
        assert_eq!(
            chsh_indicator(&rec(2, 0, 0, 0)),
            Err(AnalysisError::NonBinaryInput(2, 0))
        );
    }

    #[test]
    fn running_mean() {
        assert_eq!(running_violation(&[]), Err(AnalysisError::NoRounds));
        let alternating: Vec<_> = (0..10)
            .map(|k| if k % 2 == 0 { rec(0, 0, 0, 0) } else { rec(0, 0, 0, 1) })
            .collect();
        assert_eq!(running_violation(&alternating).unwrap(), 0.0);
        let three: Vec<_> = vec![rec(0, 0, 0, 0), rec(1, 1, 1, 1), rec(1, 0, 1, 1)];
        assert_eq!(running_violation(&three).unwrap(), 4.0 / 3.0);
    }
}
