//! Text checkpoint of a mixed state:
//!
//! ```text
//! VMM1
//! mesh <x0> <x1> <y0> <y1> <nx> <ny>
//! k <k>
//! eps <eps>
//! tau <tau>
//! s11 <n values>
//! s12 <n values>
//! s22 <n values>
//! u <n values>
//! ```

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Result, VmmError};
use crate::mesh::build_rect_mesh;
use crate::mixed::{MixedSpace, MixedState};

const MAGIC: &str = "VMM1";
const BLOCKS: [&str; 4] = ["s11", "s12", "s22", "u"];

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    pub k: usize,
    pub state: MixedState,
}

impl Checkpoint {
    pub fn new(space: &MixedSpace, state: &MixedState) -> Self {
        let m = &space.mesh;
        Checkpoint {
            x_range: m.x_range,
            y_range: m.y_range,
            nx: m.nx,
            ny: m.ny,
            k: space.k,
            state: state.clone(),
        }
    }

    /// Rebuilds the space the state lives on.
    pub fn space(&self) -> Result<MixedSpace> {
        let mesh = build_rect_mesh(self.x_range, self.y_range, self.nx, self.ny)?;
        let space = MixedSpace::new(Arc::new(mesh), self.k)?;
        if space.n_total() != self.state.x.len() {
            return Err(parse_err("coefficient count does not match the mesh"));
        }
        Ok(space)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let (x0, x1) = self.x_range;
        let (y0, y1) = self.y_range;
        let _ = writeln!(s, "{MAGIC}");
        let _ = writeln!(
            s,
            "mesh {x0:e} {x1:e} {y0:e} {y1:e} {} {}",
            self.nx, self.ny
        );
        let _ = writeln!(s, "k {}", self.k);
        let _ = writeln!(s, "eps {:e}", self.state.eps);
        let _ = writeln!(s, "tau {:e}", self.state.tau);
        let n = self.state.x.len() / 4;
        for (b, name) in BLOCKS.iter().enumerate() {
            s.push_str(name);
            for v in &self.state.x[b * n..(b + 1) * n] {
                let _ = write!(s, " {v:e}");
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(MAGIC) {
            return Err(parse_err("missing VMM1 header"));
        }
        let mut field = |key: &str| -> Result<Vec<String>> {
            let line = lines
                .next()
                .ok_or_else(|| parse_err(&format!("missing `{key}` line")))?;
            let mut it = line.split_whitespace();
            if it.next() != Some(key) {
                return Err(parse_err(&format!("expected `{key}` line, got `{line}`")));
            }
            Ok(it.map(str::to_string).collect())
        };
        let mesh = field("mesh")?;
        if mesh.len() != 6 {
            return Err(parse_err("mesh line needs 6 entries"));
        }
        let f = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| parse_err(&format!("`{s}`: {e}")))
        };
        let u = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| parse_err(&format!("`{s}`: {e}")))
        };
        let one = |v: Vec<String>| v.into_iter().next().ok_or_else(|| parse_err("empty line"));
        let k = u(&one(field("k")?)?)?;
        let eps = f(&one(field("eps")?)?)?;
        let tau = f(&one(field("tau")?)?)?;
        let mut x = Vec::new();
        let mut n = None;
        for name in BLOCKS {
            let vals = field(name)?;
            if *n.get_or_insert(vals.len()) != vals.len() {
                return Err(parse_err("blocks differ in length"));
            }
            for v in vals {
                x.push(f(&v)?);
            }
        }
        Ok(Checkpoint {
            x_range: (f(&mesh[0])?, f(&mesh[1])?),
            y_range: (f(&mesh[2])?, f(&mesh[3])?),
            nx: u(&mesh[4])?,
            ny: u(&mesh[5])?,
            k,
            state: MixedState { x, eps, tau },
        })
    }
}

fn parse_err(msg: &str) -> VmmError {
    VmmError::Parse(format!("checkpoint: {msg}"))
}

pub fn write_checkpoint(path: &Path, space: &MixedSpace, state: &MixedState) -> Result<()> {
    std::fs::write(path, Checkpoint::new(space, state).to_text())?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::from_text(&std::fs::read_to_string(path)?)
}
