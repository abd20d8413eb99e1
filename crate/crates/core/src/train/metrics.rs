use crate::error::{Error, Result};
use crate::ndcore::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Metrics {
    /// Overall accuracy.
    pub oa: f64,
    /// Mean recall over the classes present in the labels.
    pub ba: f64,
    /// Recall per class; `None` for classes absent from the labels.
    pub recall: Vec<Option<f64>>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub epoch_time_s: f64,
    pub param_count: usize,
}

/// Index of the largest logit; ties go to the lowest class.
pub fn argmax<T: Scalar>(logits: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate() {
        if v > logits[best] {
            best = i;
        }
    }
    best
}

pub fn compute_metrics(predictions: &[usize], labels: &[usize], classes: usize) -> Result<Metrics> {
    if predictions.is_empty() {
        return Err(Error::Usage("no predictions to score".into()));
    }
    if predictions.len() != labels.len() {
        return Err(Error::Usage(format!("{} predictions for {} labels", predictions.len(), labels.len())));
    }
    let mut confusion = vec![vec![0usize; classes]; classes];
    for (&p, &y) in predictions.iter().zip(labels) {
        if p >= classes || y >= classes {
            return Err(Error::Data(format!("class index out of range for {classes} classes")));
        }
        confusion[y][p] += 1;
    }
    let correct: usize = (0..classes).map(|c| confusion[c][c]).sum();
    let recall: Vec<Option<f64>> = confusion
        .iter()
        .enumerate()
        .map(|(c, row)| {
            let total: usize = row.iter().sum();
            (total > 0).then(|| row[c] as f64 / total as f64)
        })
        .collect();
    let present: Vec<f64> = recall.iter().flatten().copied().collect();
    Ok(Metrics {
        oa: correct as f64 / labels.len() as f64,
        ba: present.iter().sum::<f64>() / present.len() as f64,
        recall,
        confusion,
        epoch_time_s: 0.0,
        param_count: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndcore::Rng;

    #[test]
    fn hand_cases() {
        let m = compute_metrics(&[0, 1, 2], &[0, 1, 2], 3).unwrap();
        assert_eq!((m.oa, m.ba), (1.0, 1.0));
        let m = compute_metrics(&[0, 0, 0, 0], &[0, 0, 1, 1], 2).unwrap();
        assert_eq!((m.oa, m.ba), (0.5, 0.5));
        let m = compute_metrics(&[0, 0, 0, 0], &[0, 0, 0, 1], 2).unwrap();
        assert_eq!((m.oa, m.ba), (0.75, 0.5));
        assert_eq!(m.confusion, vec![vec![3, 0], vec![1, 0]]);
    }

    #[test]
    fn absent_classes_leave_the_average() {
        let m = compute_metrics(&[0, 2, 2], &[0, 0, 2], 3).unwrap();
        assert_eq!(m.recall, vec![Some(0.5), None, Some(1.0)]);
        assert_eq!(m.ba, 0.75);
    }

    #[test]
    fn errors() {
        assert!(matches!(compute_metrics(&[], &[], 2), Err(Error::Usage(_))));
        assert!(compute_metrics(&[0], &[0, 1], 2).is_err());
        assert!(compute_metrics(&[3], &[0], 2).is_err());
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[1.0f32, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[0.0f64; 4]), 0);
    }

    #[test]
    fn confusion_agrees_with_direct_formulas() {
        let mut rng = Rng::new(0);
        for _ in 0..100 {
            let n = rng.int_inclusive(1, 50);
            let c = rng.int_inclusive(2, 7);
            let labels: Vec<usize> = (0..n).map(|_| rng.int_inclusive(0, c - 1)).collect();
            let preds: Vec<usize> = (0..n).map(|_| rng.int_inclusive(0, c - 1)).collect();
            let m = compute_metrics(&preds, &labels, c).unwrap();
            let direct_oa = preds.iter().zip(&labels).filter(|(p, y)| p == y).count() as f64 / n as f64;
            assert_eq!(m.oa, direct_oa);
            let mut recalls = Vec::new();
            for class in 0..c {
                let idx: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
                if !idx.is_empty() {
                    recalls.push(idx.iter().filter(|&&i| preds[i] == class).count() as f64 / idx.len() as f64);
                }
            }
            assert_eq!(m.ba, recalls.iter().sum::<f64>() / recalls.len() as f64);
            for (class, row) in m.confusion.iter().enumerate() {
                assert_eq!(row.iter().sum::<usize>(), labels.iter().filter(|&&y| y == class).count());
            }
        }
    }
}
