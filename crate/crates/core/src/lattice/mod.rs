//! Hypercubic lattice geometry: sites, links, plaquettes and staples.
//!
//! Sites are indexed row-major in `dims` (the last coordinate runs fastest).
//! Links are indexed lexicographically in `(site, direction)`, skipping links
//! that would leave an open boundary.

mod gauge_fixing;

use std::fmt;
use std::str::FromStr;

use crate::error::{CoreError, Result};

pub use gauge_fixing::{gauge_fix, GaugeFixing};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Open,
    Periodic,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Open => f.write_str("open"),
            Boundary::Periodic => f.write_str("periodic"),
        }
    }
}

impl FromStr for Boundary {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "open" => Ok(Boundary::Open),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(CoreError::InvalidParameter(format!(
                "unknown boundary '{other}' (expected open or periodic)"
            ))),
        }
    }
}

/// A link is identified by its base site and its (positive) direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Link {
    pub site: usize,
    pub dir: usize,
}

/// Four links around a unit square in the `(mu, nu)` plane, `mu < nu`.
///
/// Link order is `(x, mu)`, `(x + mu, nu)`, `(x + nu, mu)`, `(x, nu)`.
/// Orientations are kept for completeness; for Z2 every link is its own
/// inverse so they are all `+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Plaquette {
    pub site: usize,
    pub plane: (usize, usize),
    pub links: [usize; 4],
    pub orientations: [i8; 4],
}

/// The three links that close a plaquette around `parent_link`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Staple {
    pub parent_link: usize,
    pub plaquette: usize,
    pub links: [usize; 3],
}

#[derive(Debug, Clone)]
pub struct Lattice {
    dims: Vec<usize>,
    boundary: Boundary,
    strides: Vec<usize>,
    n_sites: usize,
    links: Vec<Link>,
    /// `link_index[site * D + dir]`, `None` where an open boundary cuts the link.
    link_index: Vec<Option<usize>>,
    plaquettes: Vec<Plaquette>,
    /// Plaquettes containing each link, in ascending plaquette order.
    link_plaquettes: Vec<Vec<usize>>,
}

impl Lattice {
    pub fn new(dims: &[usize], boundary: Boundary) -> Result<Self> {
        let d = dims.len();
        if !(2..=4).contains(&d) {
            return Err(CoreError::InvalidLattice(format!(
                "dimension must be between 2 and 4, got {d}"
            )));
        }
        if let Some(&l) = dims.iter().find(|&&l| l < 2) {
            return Err(CoreError::InvalidLattice(format!(
                "every extent must be at least 2, got {l}"
            )));
        }
        if boundary == Boundary::Periodic {
            if let Some(&l) = dims.iter().find(|&&l| l < 3) {
                return Err(CoreError::InvalidLattice(format!(
                    "periodic extents must be at least 3 (extent {l} would double-count plaquettes)"
                )));
            }
        }

        let mut strides = vec![1; d];
        for mu in (0..d - 1).rev() {
            strides[mu] = strides[mu + 1] * dims[mu + 1];
        }
        let n_sites: usize = dims.iter().product();

        let mut lattice = Lattice {
            dims: dims.to_vec(),
            boundary,
            strides,
            n_sites,
            links: Vec::new(),
            link_index: vec![None; n_sites * d],
            plaquettes: Vec::new(),
            link_plaquettes: Vec::new(),
        };

        for site in 0..n_sites {
            for dir in 0..d {
                if lattice.neighbor(site, dir).is_some() {
                    lattice.link_index[site * d + dir] = Some(lattice.links.len());
                    lattice.links.push(Link { site, dir });
                }
            }
        }

        for site in 0..n_sites {
            for mu in 0..d {
                for nu in mu + 1..d {
                    if let Some(links) = lattice.square(site, mu, nu) {
                        lattice.plaquettes.push(Plaquette {
                            site,
                            plane: (mu, nu),
                            links,
                            orientations: [1; 4],
                        });
                    }
                }
            }
        }

        let mut link_plaquettes = vec![Vec::new(); lattice.links.len()];
        for (p, plaq) in lattice.plaquettes.iter().enumerate() {
            for &l in &plaq.links {
                link_plaquettes[l].push(p);
            }
        }
        lattice.link_plaquettes = link_plaquettes;

        Ok(lattice)
    }

    fn square(&self, site: usize, mu: usize, nu: usize) -> Option<[usize; 4]> {
        let x_mu = self.neighbor(site, mu)?;
        let x_nu = self.neighbor(site, nu)?;
        Some([
            self.link_at(site, mu)?,
            self.link_at(x_mu, nu)?,
            self.link_at(x_nu, mu)?,
            self.link_at(site, nu)?,
        ])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dimension(&self) -> usize {
        self.dims.len()
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_links(&self) -> usize {
        self.links.len()
    }

    pub fn n_plaquettes(&self) -> usize {
        self.plaquettes.len()
    }

    pub fn coords(&self, site: usize) -> Vec<usize> {
        self.dims
            .iter()
            .zip(&self.strides)
            .map(|(&l, &s)| (site / s) % l)
            .collect()
    }

    pub fn site_index(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.strides).map(|(&x, &s)| x * s).sum()
    }

    /// Site one step forward in direction `dir`, if it exists.
    pub fn neighbor(&self, site: usize, dir: usize) -> Option<usize> {
        let l = self.dims[dir];
        let s = self.strides[dir];
        let x = (site / s) % l;
        if x + 1 < l {
            Some(site + s)
        } else {
            match self.boundary {
                Boundary::Open => None,
                Boundary::Periodic => Some(site + s - l * s),
            }
        }
    }

    pub fn link_at(&self, site: usize, dir: usize) -> Option<usize> {
        self.link_index
            .get(site * self.dims.len() + dir)
            .copied()
            .flatten()
    }

    pub fn link(&self, index: usize) -> Link {
        self.links[index]
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    /// Both end points of a link, base site first.
    pub fn link_endpoints(&self, index: usize) -> (usize, usize) {
        let Link { site, dir } = self.links[index];
        let end = self
            .neighbor(site, dir)
            .expect("stored links always have an end point");
        (site, end)
    }

    /// Every link touching `site`, ascending.
    pub fn incident_links(&self, site: usize) -> Vec<usize> {
        (0..self.links.len())
            .filter(|&l| {
                let (a, b) = self.link_endpoints(l);
                a == site || b == site
            })
            .collect()
    }

    pub fn plaquettes(&self) -> &[Plaquette] {
        &self.plaquettes
    }

    pub fn plaquettes_of(&self, link: usize) -> &[usize] {
        &self.link_plaquettes[link]
    }

    pub fn staples_of(&self, link: usize) -> Result<Vec<Staple>> {
        self.check_link(link)?;
        Ok(self.link_plaquettes[link]
            .iter()
            .map(|&p| {
                let mut others = [0usize; 3];
                let mut k = 0;
                for &l in &self.plaquettes[p].links {
                    if l != link {
                        others[k] = l;
                        k += 1;
                    }
                }
                Staple {
                    parent_link: link,
                    plaquette: p,
                    links: others,
                }
            })
            .collect())
    }

    pub(crate) fn check_link(&self, link: usize) -> Result<()> {
        if link < self.links.len() {
            Ok(())
        } else {
            Err(CoreError::LinkOutOfRange {
                index: link,
                n_links: self.links.len(),
            })
        }
    }
}
