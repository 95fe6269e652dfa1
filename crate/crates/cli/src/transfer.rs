//! Transferability evaluation: how well adversarial texts crafted against
//! one oracle carry over to another. Reported as the other oracle's accuracy
//! on the adversarial texts — lower means more transferable.

use crate::suite::{ExampleRecord, RecordStatus};
use hardlabel::{HardLabelOracle, OracleError};

#[derive(Debug, thiserror::Error)]
pub enum TransferError {
    #[error("results contain no successful adversarial examples")]
    EmptyResults,
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Accuracy of `oracle` on the successful adversarial texts in `records`.
pub fn transfer_accuracy(
    records: &[ExampleRecord],
    oracle: &dyn HardLabelOracle,
) -> Result<f64, TransferError> {
    let mut total = 0usize;
    let mut correct = 0usize;
    for record in records {
        if record.status != RecordStatus::Success {
            continue;
        }
        let adv = record
            .adv_text
            .as_deref()
            .expect("successful record carries adversarial text");
        total += 1;
        if oracle.predict_label(adv)? == record.orig_label {
            correct += 1;
        }
    }
    if total == 0 {
        return Err(TransferError::EmptyResults);
    }
    Ok(correct as f64 / total as f64)
}
