//! Text serialization of codebook tensors and the per-codeword report CSV.
//!
//! Every real number is written with 17 significant digits so the reader
//! reproduces the tensor bit for bit.

use std::fmt::Write;

use super::{Codeword, CodebookError, CodebookSpec, CodebookTensor, SamplingGrid, SteeringGrid};
use crate::antenna::UraGeometry;
use crate::geometry::{Frame, SteeringDirection};
use crate::linalg::{CVector, C64};

const MAGIC: &str = "codebook-tensor v1";
pub const REPORT_CSV_HEADER: &str = "l,i,steer_el,steer_az,gain_loss,max_sidelobe,k_star";

fn f(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_tensor(t: &CodebookTensor) -> String {
    let s = &t.spec;
    let mut out = String::new();
    let _ = writeln!(out, "# {MAGIC}");
    let m = t.m.map_or("none".to_string(), |m| m.to_string());
    let _ = writeln!(
        out,
        "regions {} aux {} n_t {} directions {}",
        t.n,
        m,
        s.n_t(),
        t.directions.len()
    );
    let _ = writeln!(
        out,
        "array {} {} {}",
        s.geom.rows,
        s.geom.cols,
        f(s.geom.spacing_wavelengths)
    );
    let _ = writeln!(
        out,
        "design {} {} {}",
        f(s.eps),
        f(s.null_bound_rel),
        f(s.downtilt_deg)
    );
    let g = &s.sampling;
    let _ = writeln!(out, "sampling {} {} {}", f(g.el_step_deg), f(g.az_step_deg), f(g.az_limit_deg));
    let st = &s.steering;
    let _ = writeln!(
        out,
        "steering {} {} {} {} {}",
        f(st.el_start_deg),
        f(st.el_end_deg),
        f(st.el_step_deg),
        f(st.az_limit_deg),
        f(st.az_step_deg)
    );
    for (i, d) in t.directions.iter().enumerate() {
        let _ = writeln!(out, "dir {i} {} {}", f(d.elevation_deg), f(d.azimuth_deg));
    }
    for (l, book) in t.codebooks.iter().enumerate() {
        for (i, cw) in book.iter().enumerate() {
            let k = cw.k_star.map_or("none".to_string(), |k| k.to_string());
            let _ = writeln!(
                out,
                "codeword {l} {i} {k} {} {} {}",
                f(cw.gain_loss),
                f(cw.max_sidelobe_up),
                f(cw.target_max_gain)
            );
            out.push('w');
            for z in cw.w.iter() {
                let _ = write!(out, " {} {}", f(z.re), f(z.im));
            }
            out.push('\n');
        }
    }
    out
}

struct Lines<'a> {
    inner: Box<dyn Iterator<Item = (usize, &'a str)> + 'a>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: Box::new(
                text.lines()
                    .enumerate()
                    .map(|(i, l)| (i + 1, l.trim()))
                    .filter(|(_, l)| !l.is_empty() && !l.starts_with('#')),
            ),
            last: 0,
        }
    }

    fn record(&mut self, tag: &str) -> Result<(usize, Vec<&'a str>), CodebookError> {
        let (ln, l) = self.inner.next().ok_or_else(|| CodebookError::Parse {
            line: self.last + 1,
            msg: format!("missing '{tag}' record"),
        })?;
        self.last = ln;
        let mut toks: Vec<&str> = l.split_whitespace().collect();
        if toks.first() != Some(&tag) {
            return Err(perr(ln, format!("expected '{tag}' record")));
        }
        toks.remove(0);
        Ok((ln, toks))
    }
}

fn perr(line: usize, msg: impl Into<String>) -> CodebookError {
    CodebookError::Parse { line, msg: msg.into() }
}

fn num<T: std::str::FromStr>(ln: usize, s: Option<&&str>) -> Result<T, CodebookError>
where
    T::Err: std::fmt::Display,
{
    let s = s.ok_or_else(|| perr(ln, "missing field"))?;
    s.parse::<T>().map_err(|e| perr(ln, format!("'{s}': {e}")))
}

fn opt_usize(ln: usize, s: Option<&&str>) -> Result<Option<usize>, CodebookError> {
    match s {
        Some(&"none") => Ok(None),
        other => num(ln, other).map(Some),
    }
}

fn expect_len(ln: usize, toks: &[&str], n: usize) -> Result<(), CodebookError> {
    if toks.len() != n {
        return Err(perr(ln, format!("expected {n} fields, found {}", toks.len())));
    }
    Ok(())
}

pub fn read_tensor(text: &str) -> Result<CodebookTensor, CodebookError> {
    if !text.lines().next().is_some_and(|l| l.trim() == format!("# {MAGIC}")) {
        return Err(perr(1, format!("missing '# {MAGIC}' header")));
    }
    let mut lines = Lines::new(text);

    let (ln, h) = lines.record("regions")?;
    expect_len(ln, &h, 7)?;
    if h[1] != "aux" || h[3] != "n_t" || h[5] != "directions" {
        return Err(perr(ln, "expected 'regions <N> aux <M|none> n_t <n> directions <L>'"));
    }
    let n: usize = num(ln, h.first())?;
    let m = opt_usize(ln, h.get(2))?;
    let n_t: usize = num(ln, h.get(4))?;
    let n_dirs: usize = num(ln, h.get(6))?;

    let (ln, a) = lines.record("array")?;
    expect_len(ln, &a, 3)?;
    let geom = UraGeometry::new(num(ln, a.first())?, num(ln, a.get(1))?, num(ln, a.get(2))?)
        .map_err(|e| perr(ln, e.to_string()))?;
    if geom.n_elements() != n_t {
        return Err(perr(ln, format!("array has {} elements, header says {n_t}", geom.n_elements())));
    }

    let (ln, d) = lines.record("design")?;
    expect_len(ln, &d, 3)?;
    let (eps, null_bound_rel, downtilt_deg) = (num(ln, d.first())?, num(ln, d.get(1))?, num(ln, d.get(2))?);

    let (ln, s) = lines.record("sampling")?;
    expect_len(ln, &s, 3)?;
    let sampling = SamplingGrid {
        el_step_deg: num(ln, s.first())?,
        az_step_deg: num(ln, s.get(1))?,
        az_limit_deg: num(ln, s.get(2))?,
    };

    let (ln, s) = lines.record("steering")?;
    expect_len(ln, &s, 5)?;
    let steering = SteeringGrid {
        el_start_deg: num(ln, s.first())?,
        el_end_deg: num(ln, s.get(1))?,
        el_step_deg: num(ln, s.get(2))?,
        az_limit_deg: num(ln, s.get(3))?,
        az_step_deg: num(ln, s.get(4))?,
    };

    let spec = CodebookSpec {
        geom,
        eps,
        null_bound_rel,
        downtilt_deg,
        sampling,
        steering,
    };
    spec.validate().map_err(|e| perr(ln, e.to_string()))?;

    let mut directions = Vec::with_capacity(n_dirs);
    for i in 0..n_dirs {
        let (ln, t) = lines.record("dir")?;
        expect_len(ln, &t, 3)?;
        if num::<usize>(ln, t.first())? != i {
            return Err(perr(ln, format!("expected direction {i}")));
        }
        directions.push(SteeringDirection {
            elevation_deg: num(ln, t.get(1))?,
            azimuth_deg: num(ln, t.get(2))?,
            frame: Frame::Local,
        });
    }

    let mut codebooks = Vec::with_capacity(n);
    for l in 0..n {
        let mut book = Vec::with_capacity(n_dirs);
        for (i, dir) in directions.iter().enumerate() {
            let (ln, t) = lines.record("codeword")?;
            expect_len(ln, &t, 6)?;
            if num::<usize>(ln, t.first())? != l || num::<usize>(ln, t.get(1))? != i {
                return Err(perr(ln, format!("expected codeword ({l}, {i})")));
            }
            let k_star = opt_usize(ln, t.get(2))?;
            let (gain_loss, max_sidelobe_up, target_max_gain) =
                (num(ln, t.get(3))?, num(ln, t.get(4))?, num(ln, t.get(5))?);
            let (ln, wt) = lines.record("w")?;
            expect_len(ln, &wt, 2 * n_t)?;
            let w = wt
                .chunks(2)
                .map(|p| Ok(C64::new(num(ln, p.first())?, num(ln, p.get(1))?)))
                .collect::<Result<Vec<_>, CodebookError>>()?;
            book.push(Codeword {
                w: CVector(w),
                steer_dir: *dir,
                gain_loss,
                max_sidelobe_up,
                target_max_gain,
                k_star,
            });
        }
        codebooks.push(book);
    }
    if let Some((ln, _)) = lines.inner.next() {
        return Err(perr(ln, "trailing content"));
    }
    Ok(CodebookTensor {
        n,
        m,
        spec,
        directions,
        codebooks,
    })
}

/// One CSV row per codeword.
pub fn write_report_csv(t: &CodebookTensor) -> String {
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    for (l, book) in t.codebooks.iter().enumerate() {
        for (i, cw) in book.iter().enumerate() {
            let k = cw.k_star.map_or(String::new(), |k| k.to_string());
            let _ = writeln!(
                out,
                "{l},{i},{},{},{:e},{:e},{k}",
                cw.steer_dir.elevation_deg, cw.steer_dir.azimuth_deg, cw.gain_loss, cw.max_sidelobe_up
            );
        }
    }
    out
}
