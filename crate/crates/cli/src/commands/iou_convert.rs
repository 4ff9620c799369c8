use anyhow::Result;
use mvxray_core::boxes;

/// Prints the 3D IoU threshold whose per-axis center shift matches the one
/// the 2D threshold tolerates.
#[derive(clap::Args)]
pub struct Args {
    /// 2D IoU threshold in (0, 1]
    #[arg(long, value_parser = parse_t2)]
    pub t2: f64,
}

fn parse_t2(s: &str) -> Result<f64, String> {
    let t2: f64 = s.parse().map_err(|_| format!("'{s}' is not a valid number"))?;
    if !(t2 > 0.0 && t2 <= 1.0) {
        return Err(format!("threshold must be in (0, 1], got {t2}"));
    }
    Ok(t2)
}

pub fn run(args: Args) -> Result<()> {
    println!("{}", boxes::convert_threshold_2d_to_3d(args.t2)?);
    Ok(())
}
