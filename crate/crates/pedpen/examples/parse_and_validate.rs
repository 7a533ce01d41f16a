//! Parse a pedigree file, run the structural validator, and list founders.
//!
//! ```bash
//! cargo run -p pedpen --example parse_and_validate
//! ```

use pedpen::pedigree::{has_errors, parse_pedigrees_csv, validate};

const PEDIGREES: &str = "\
PedigreeID,ID,Sex,MotherID,FatherID,isProband,CurAge,isAff,Age,Geno
1,1,0,NA,NA,0,74,0,NA,NA
1,2,1,NA,NA,0,78,1,62,NA
1,3,0,1,2,1,47,1,39,1
1,4,1,1,2,0,51,0,NA,NA
1,5,1,NA,NA,0,49,0,NA,NA
1,6,0,3,5,0,22,0,NA,NA
2,1,0,NA,NA,0,70,0,NA,NA
2,2,1,NA,NA,0,99,0,NA,NA
2,3,1,1,7,1,40,1,35,1
";

fn main() -> anyhow::Result<()> {
    let pedigrees = parse_pedigrees_csv(PEDIGREES.as_bytes())?;
    println!("parsed {} pedigrees", pedigrees.len());

    for ped in &pedigrees {
        println!("\npedigree {} ({} members)", ped.id, ped.members.len());
        println!("  founders: {:?}", ped.founders());
        let issues = validate(ped, 94);
        if issues.is_empty() {
            println!("  no validation issues");
        }
        for issue in &issues {
            println!("  {issue}");
        }
        if has_errors(&issues) {
            println!("  -> this pedigree would be rejected by `estimate`");
        } else {
            let clamped = ped.clamped_to(94);
            let over = ped
                .members
                .iter()
                .zip(&clamped.members)
                .filter(|(a, b)| a.cur_age != b.cur_age)
                .count();
            if over > 0 {
                println!("  -> {over} censoring age(s) clamped to 94 for estimation");
            }
        }
    }
    Ok(())
}
