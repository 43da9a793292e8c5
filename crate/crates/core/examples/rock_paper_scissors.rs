//! A three-item cycle: only the generalised model can fit it.
//!
//! ```text
//! cargo run --example rock_paper_scissors
//! ```

use gpgp::dataset::{Duel, ItemTable, PreferenceDataset};
use gpgp::eval::accuracy;
use gpgp::models::{fit, FitOptions, ModelKind};
use nalgebra::DMatrix;

fn main() -> gpgp::error::Result<()> {
    let items = ItemTable::new(
        vec!["rock".into(), "paper".into(), "scissors".into()],
        DMatrix::from_row_slice(3, 2, &[1.0, 0.0, -0.5, 0.87, -0.5, -0.87]),
    )?;
    // paper beats rock, scissors beats paper, rock beats scissors; each twice.
    let duels = [Duel::won(1, 0), Duel::won(2, 1), Duel::won(0, 2)].repeat(2);
    let ds = PreferenceDataset::new(items, duels)?;

    for kind in ModelKind::ALL {
        let model = fit(&ds, kind, &FitOptions::default())?;
        let p = |i, j| model.predict_pair(i, j);
        println!(
            "{kind:<12} train accuracy {:.3}   P(paper>rock) {:.3}  P(scissors>paper) {:.3}  P(rock>scissors) {:.3}",
            accuracy(&model, &ds)?,
            p(1, 0)?,
            p(2, 1)?,
            p(0, 2)?
        );
    }
    Ok(())
}
