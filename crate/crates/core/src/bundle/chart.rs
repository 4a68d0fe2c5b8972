use serde::Serialize;

use crate::diffeology::{is_plot, Diffeology, OpenBox, Plot};
use crate::error::{HolabError, Result};

/// The base of a trivialized bundle: one open box in `ℝ^d`, optionally
/// periodic (the quotient by a rectangular lattice) and optionally
/// embedded in `ℝ^D` for display.
#[derive(Clone, Debug)]
pub struct BaseChart {
    name: String,
    domain: OpenBox,
    periods: Option<Vec<f64>>,
    embedding: Option<Plot>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChartSummary {
    pub name: String,
    pub dim: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub periods: Option<Vec<f64>>,
}

impl BaseChart {
    pub fn new(name: impl Into<String>, domain: OpenBox) -> Result<Self> {
        if domain.dim() == 0 {
            return Err(HolabError::Input("base chart must have positive dimension".into()));
        }
        Ok(Self {
            name: name.into(),
            domain,
            periods: None,
            embedding: None,
        })
    }

    pub fn with_periods(mut self, periods: Vec<f64>) -> Result<Self> {
        if periods.len() != self.dim() || periods.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(HolabError::Input("one positive finite period per axis".into()));
        }
        self.periods = Some(periods);
        Ok(self)
    }

    /// Attaches a display embedding after probing it for smoothness.
    pub fn with_embedding(mut self, embedding: Plot) -> Result<Self> {
        if embedding.domain() != &self.domain {
            return Err(HolabError::Shape("embedding must be defined on the chart domain".into()));
        }
        let target = Diffeology::standard(embedding.target_dim());
        let m = is_plot(&embedding, &target, 4)?;
        if let Some(r) = m.rejection() {
            return Err(HolabError::Input(format!("embedding is not smooth: {}", r.reason)));
        }
        self.embedding = Some(embedding);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &OpenBox {
        &self.domain
    }

    pub fn periods(&self) -> Option<&[f64]> {
        self.periods.as_deref()
    }

    pub fn embedding(&self) -> Option<&Plot> {
        self.embedding.as_ref()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.domain.contains(x)
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(HolabError::Shape(format!(
                "point of dimension {} in chart '{}' of dimension {}",
                x.len(),
                self.name,
                self.dim()
            )));
        }
        if !self.domain.contains(x) {
            return Err(HolabError::Domain(format!("point {x:?} is outside chart '{}'", self.name)));
        }
        Ok(())
    }

    /// `Σ nᵢ pᵢ eᵢ`; non-zero windings need a periodic chart.
    pub fn lattice_vector(&self, winding: &[i64]) -> Result<Vec<f64>> {
        if winding.len() != self.dim() {
            return Err(HolabError::Shape("winding vector dimension".into()));
        }
        if winding.iter().all(|n| *n == 0) {
            return Ok(vec![0.0; self.dim()]);
        }
        let periods = self
            .periods
            .as_ref()
            .ok_or_else(|| HolabError::Input(format!("chart '{}' is not periodic", self.name)))?;
        Ok(winding.iter().zip(periods).map(|(n, p)| *n as f64 * p).collect())
    }

    /// True when `offset` is a lattice vector of the chart.
    pub fn is_lattice_vector(&self, offset: &[f64], tol: f64) -> bool {
        if offset.iter().all(|v| v.abs() <= tol) {
            return true;
        }
        match &self.periods {
            None => false,
            Some(p) => offset.iter().zip(p).all(|(o, p)| (o / p - (o / p).round()).abs() * p <= tol),
        }
    }

    pub fn summary(&self) -> ChartSummary {
        ChartSummary {
            name: self.name.clone(),
            dim: self.dim(),
            lo: self.domain.lo().to_vec(),
            hi: self.domain.hi().to_vec(),
            periods: self.periods.clone(),
        }
    }
}
