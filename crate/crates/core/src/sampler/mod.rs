//! Random structures and the Monte Carlo experiments run on them.

mod bracket;
mod closure_exp;
mod draw;
mod qe;
mod semi_good;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use bracket::{
    bracket_experiment, sample_embeddings, weakly_nice_experiment, BracketReport, BracketTrial, Prediction,
    WeaklyNiceReport, WeaklyNiceTrial,
};
pub use closure_exp::{closure_experiment, ClosureExperimentReport, ClosureTrial};
pub use draw::{draw_base, draw_expansion, new_atom_probability};
pub use qe::{
    extended_catalog, qe_determinism_experiment, shipped_catalog, CatalogFormula, CollisionGroup, Formula, Literal,
    QeReport, QeTrial, Term,
};
pub use semi_good::{semi_good_experiment, SemiGoodQuad, SemiGoodReport, SemiGoodTrial};

use crate::error::{Error, Result};
use crate::expansion::ExpansionContext;
use crate::structures::RelStructure;
use crate::weights::BaseContext;

/// Default number of sampled base embeddings per trial.
pub const DEFAULT_EMBED_CAP: usize = 200;

/// Generator for one trial: the seed picks the key, the trial index the
/// stream, so trials can run in any order.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleConfig {
    pub n: usize,
    pub seed: u64,
    pub trials: usize,
    pub ctx: BaseContext,
    pub plus: Option<ExpansionContext>,
    pub eps: f64,
    pub embed_cap: usize,
}

impl SampleConfig {
    pub fn new(n: usize, seed: u64, trials: usize, ctx: BaseContext) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("universe size must be at least 2, got {n}")));
        }
        if trials == 0 {
            return Err(Error::invalid("at least one trial is needed"));
        }
        let eps = ctx.eps();
        Ok(SampleConfig {
            n,
            seed,
            trials,
            ctx,
            plus: None,
            eps,
            embed_cap: DEFAULT_EMBED_CAP,
        })
    }

    pub fn with_expansion(mut self, plus: ExpansionContext) -> Result<Self> {
        if plus.base() != &self.ctx {
            return Err(Error::invalid("expansion context is built on a different base context"));
        }
        self.plus = Some(plus);
        Ok(self)
    }

    pub fn with_eps(mut self, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::invalid(format!("eps must lie in (0,1), got {eps}")));
        }
        self.eps = eps;
        Ok(self)
    }

    pub fn with_embed_cap(mut self, cap: usize) -> Result<Self> {
        if cap == 0 {
            return Err(Error::invalid("embedding cap must be positive"));
        }
        self.embed_cap = cap;
        Ok(self)
    }

    pub fn rng(&self, trial: usize) -> ChaCha8Rng {
        trial_rng(self.seed, trial as u64)
    }

    /// The structure of one trial: the base draw, then the expansion when
    /// one is configured. Also returns the generator for further use.
    pub fn draw(&self, trial: usize) -> Result<(RelStructure, ChaCha8Rng)> {
        let mut rng = self.rng(trial);
        let base = draw_base(self.n, &self.ctx, &mut rng)?;
        let m = match &self.plus {
            Some(p) => draw_expansion(&base, p, &mut rng)?,
            None => base,
        };
        Ok((m, rng))
    }

    /// Run `f` on every trial in parallel; results come back in trial order.
    pub fn run_trials<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync,
    {
        (0..self.trials).into_par_iter().map(&f).collect()
    }
}
