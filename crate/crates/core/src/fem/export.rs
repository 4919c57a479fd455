use std::io::Write;

use super::fields::SolutionFields;
use crate::mesh::TriMesh;

/// Writes nodal fields as CSV with header `node,x,y,V,u,v,n,p`.
pub fn write_fields_csv<W: Write>(fields: &SolutionFields, mesh: &TriMesh, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", "x", "y", "V", "u", "v", "n", "p"])?;
    for (i, x) in mesh.vertices().iter().enumerate() {
        w.write_record(&[
            i.to_string(),
            x[0].to_string(),
            x[1].to_string(),
            fields.potential[i].to_string(),
            fields.u[i].to_string(),
            fields.v[i].to_string(),
            fields.n[i].to_string(),
            fields.p[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::testing::device;
    use crate::fem::{gummel_iterate, SampleFields};

    #[test]
    fn one_row_per_node() {
        let (disc, params, bc) = device(10.0);
        let fields = SampleFields::nominal(&disc, &params);
        let sol = gummel_iterate(&disc, &fields, &params, &bc, &Default::default()).unwrap();
        let mut buf = Vec::new();
        write_fields_csv(&sol, disc.mesh(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("node,x,y,V,u,v,n,p"));
        assert_eq!(lines.count(), disc.num_nodes());
    }
}
