//! Test-set accuracy metrics.

use serde::Serialize;

use crate::dataset::Dataset;
use crate::predictor::Predictor;

/// Accuracy summary of a predictor on a test set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsReport {
    pub mse: f64,
    pub mae: f64,
    /// `1 - mse / Var(y)`; absent when the test response is constant.
    pub explained_variance: Option<f64>,
}

/// Predictions of a predictor over every row of a dataset.
pub fn predict_dataset<P: Predictor + ?Sized>(predictor: &P, data: &Dataset) -> Vec<f64> {
    let rows: Vec<&[f64]> = (0..data.n_rows()).map(|i| data.row(i)).collect();
    predictor.predict_rows(&rows)
}

/// Mean squared error, mean absolute error, and explained variance of a
/// predictor on a test set.
pub fn evaluate<P: Predictor + ?Sized>(predictor: &P, test: &Dataset) -> MetricsReport {
    let predictions = predict_dataset(predictor, test);
    metrics_from_predictions(&predictions, test.response())
}

/// The same metrics from precomputed predictions.
pub fn metrics_from_predictions(predictions: &[f64], response: &[f64]) -> MetricsReport {
    assert_eq!(predictions.len(), response.len());
    let n = response.len() as f64;
    let mut se = 0.0;
    let mut ae = 0.0;
    for (&p, &y) in predictions.iter().zip(response) {
        se += (y - p) * (y - p);
        ae += (y - p).abs();
    }
    let mse = se / n;
    let mae = ae / n;
    let mean = response.iter().sum::<f64>() / n;
    let mut var = 0.0;
    for &y in response {
        var += (y - mean) * (y - mean);
    }
    let var = var / n;
    let explained_variance = if var > 0.0 { Some(1.0 - mse / var) } else { None };
    MetricsReport { mse, mae, explained_variance }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(responses: &[f64]) -> Dataset {
        let features: Vec<f64> = (0..responses.len()).map(|i| i as f64).collect();
        Dataset::new(features, responses.to_vec(), Dataset::default_names(1)).unwrap()
    }

    #[test]
    fn perfect_predictions_explain_everything() {
        let data = tiny(&[1.0, 2.0, 5.0]);
        let perfect = |x: &[f64]| match x[0] as usize {
            0 => 1.0,
            1 => 2.0,
            _ => 5.0,
        };
        let report = evaluate(&perfect, &data);
        assert_eq!(report.mse, 0.0);
        assert_eq!(report.mae, 0.0);
        assert_eq!(report.explained_variance, Some(1.0));
    }

    #[test]
    fn mean_prediction_explains_nothing() {
        let data = tiny(&[0.0, 2.0, 4.0]);
        let mean = |_: &[f64]| 2.0;
        let report = evaluate(&mean, &data);
        assert_eq!(report.explained_variance, Some(0.0));
    }

    #[test]
    fn constant_offsets_have_unit_errors() {
        let data = tiny(&[0.0, 2.0]);
        let ones = |_: &[f64]| 1.0;
        let report = evaluate(&ones, &data);
        assert_eq!(report.mse, 1.0);
        assert_eq!(report.mae, 1.0);
    }

    #[test]
    fn constant_response_has_no_explained_variance() {
        let data = tiny(&[3.0, 3.0, 3.0]);
        let zero = |_: &[f64]| 0.0;
        let report = evaluate(&zero, &data);
        assert_eq!(report.explained_variance, None);
        assert_eq!(report.mse, 9.0);
    }
}
