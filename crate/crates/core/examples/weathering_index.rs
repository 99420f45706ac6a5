//! Coverage ratings, sub-indices and the general weathering index for the
//! initial campaign on the Strasbourg blocks.

use weathermatrix::assessment::{Family, ValidatedCampaign};
use weathermatrix::fixtures::{initial_campaign, strasbourg_blocks};
use weathermatrix::index::{campaign_indices, rating_from_coverage, AveragingMode, IndexPolicy, RatingScale};

fn main() -> weathermatrix::Result<()> {
    let scale = RatingScale::default();
    for pct in [0.0, 4.0, 18.0, 40.0, 80.0, 100.0] {
        println!("{pct:>5} % -> {}  {}", rating_from_coverage(pct, &scale)?, scale.band_for(pct)?.label);
    }

    let reg = strasbourg_blocks();
    let campaign = ValidatedCampaign::new(initial_campaign(&reg, 1), &reg)?;
    let policy = IndexPolicy::default();
    let mut rows = campaign_indices(&reg, &campaign, &policy, None)?;
    rows.sort_by(|a, b| b.1.i.total_cmp(&a.1.i));

    print!("\nblock   struct");
    for f in Family::ALL {
        print!(" {:>6.6}", f.label());
    }
    println!("      i");
    let cell = |v: Option<f64>| v.map_or("     -".to_string(), |x| format!("{x:>6.2}"));
    for (subs, idx) in rows.iter().take(10) {
        print!("{:<7} {}", subs.block_id, cell(subs.i_structure));
        for f in Family::ALL {
            print!(" {}", cell(subs.family(f)));
        }
        println!(" {:>6.3}", idx.i);
    }

    // the same blocks with structure weighed against the alteration mean
    let mut split = policy.clone();
    split.mode = AveragingMode::StructureWithAlteration;
    let alt = campaign_indices(&reg, &campaign, &split, None)?;
    let worst = alt.iter().max_by(|a, b| a.1.i.total_cmp(&b.1.i)).unwrap();
    println!("\nstructure-with-alteration mode: worst block {} (i = {:.3}), policy {}", worst.0.block_id, worst.1.i, &split.hash()[..12]);
    Ok(())
}
