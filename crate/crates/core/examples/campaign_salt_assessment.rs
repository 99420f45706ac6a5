//! A drilling in the south-west face: ion contents against the salt
//! thresholds, the moisture depth profile, and a colour change between
//! two campaigns.

use weathermatrix::assessment::{assess_salt_contamination, colorimetry_delta, depth_profile, Lab, SaltThresholds};
use weathermatrix::fixtures::reference_drilling;

fn main() -> weathermatrix::Result<()> {
    let drilling = reference_drilling();
    let thresholds = SaltThresholds::default();

    println!("depth cm    Cl     NO3    SO4    w %   w_h %");
    for a in &drilling {
        let f = assess_salt_contamination(a, &thresholds);
        let mark = |c: bool| if c { "!" } else { " " };
        println!(
            "{:>3}-{:<3} {:>5.2}{} {:>5.2}{} {:>5.2}{} {:>5.1} {:>6.1}",
            a.depth_cm[0],
            a.depth_cm[1],
            a.chloride,
            mark(f.chloride.contaminated()),
            a.nitrate,
            mark(f.nitrate.contaminated()),
            a.sulfate,
            mark(f.sulfate.contaminated()),
            a.w,
            a.w_h
        );
    }
    println!("(! = above threshold: Cl {} %, NO3 {} %, SO4 {} %)", thresholds.chloride, thresholds.nitrate, thresholds.sulfate);

    let profile = depth_profile(&drilling)?;
    println!("\nwater content by depth {:?} -> {:?}", profile.water_contents(), profile.hint);

    let before = Lab::new(71.2, 1.8, 12.4);
    let after = Lab::new(64.9, 2.6, 15.1);
    println!("colour change dE*ab = {:.2}", colorimetry_delta(Some(&before), Some(&after))?);
    Ok(())
}
