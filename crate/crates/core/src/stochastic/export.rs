use std::io::Write;

use super::dopants::DopantSample;

/// Writes `seed,index,x,y,sign` rows, one per dopant.
pub fn write_samples_csv<W: Write>(samples: &[DopantSample], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["seed", "index", "x", "y", "sign"])?;
    for s in samples {
        for (i, (p, sign)) in s.positions.iter().zip(&s.charge_sign).enumerate() {
            w.write_record(&[s.seed.to_string(), i.to_string(), p[0].to_string(), p[1].to_string(), sign.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
