//! The optimisation loop: sample, forward, MSE, backward, Adam.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imaging::{sample_batch, Dataset};
use crate::metrics::evaluate;
use crate::network::{checkpoint, Mode, Network, Output};
use crate::train::adam::{adam_step, AdamState};
use crate::train::config::{lr_at, TrainConfig};
use crate::train::loss::mse_loss;

/// Offset between the weight-init seed and the sampling seed.
const SAMPLER_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone)]
pub struct Trainer {
    cfg: TrainConfig,
    net: Network,
    adam: AdamState,
    rng: ChaCha8Rng,
    iteration: u64,
}

impl Trainer {
    pub fn new(cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let net = Network::build(cfg.preset, cfg.scale, cfg.seed)?;
        let adam = AdamState::new(net.params());
        Ok(Trainer {
            cfg: cfg.clone(),
            net,
            adam,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ SAMPLER_STREAM),
            iteration: 0,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn optimizer(&self) -> &AdamState {
        &self.adam
    }

    /// Completed iterations.
    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn into_parts(self) -> (Network, AdamState) {
        (self.net, self.adam)
    }

    /// One optimisation step; returns the batch loss before the update.
    /// A non-finite loss leaves the parameters untouched.
    pub fn step(&mut self, data: &Dataset) -> Result<f64> {
        let batch = sample_batch(data, &self.cfg.sample_config(), &mut self.rng)?;
        let pred = self.net.forward(&batch.lr, &batch.base, Mode::Training, Output::Raw)?;
        let (loss, grad) = mse_loss(&pred, &batch.hr)?;
        if !loss.is_finite() {
            self.net.clear_tape();
            return Err(Error::Divergence {
                iteration: self.iteration,
                message: format!("training loss is {loss}"),
            });
        }
        let grads = self.net.backward(&grad)?;
        self.net.clear_tape();
        let lr = lr_at(self.iteration, &self.cfg);
        adam_step(self.net.params_mut(), &grads.convs, &mut self.adam, lr)?;
        self.iteration += 1;
        Ok(loss)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        checkpoint::save(path, &self.net, Some(&self.adam))
    }
}

/// One test-set evaluation during training.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPoint {
    pub iteration: u64,
    pub set: String,
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub trainer: Trainer,
    /// `(iteration, mean loss since the previous entry)`.
    pub losses: Vec<(u64, f64)>,
    pub evals: Vec<EvalPoint>,
    pub checkpoints: Vec<PathBuf>,
}

pub fn checkpoint_name(iteration: u64) -> String {
    format!("iter-{iteration:08}.mxsr")
}

fn log_line(log: &mut dyn Write, line: &str) -> Result<()> {
    writeln!(log, "{line}")
        .and_then(|_| log.flush())
        .map_err(|e| Error::io("training log", e))
}

/// Runs `cfg.iterations` steps, writing `iter`/`eval` lines to `log` and
/// checkpoints into `checkpoint_dir` when given.
///
/// On divergence the last good state is saved as `diverged-iter-N.mxsr`
/// and [`Error::Divergence`] is returned.
pub fn train(
    cfg: &TrainConfig,
    data: &Dataset,
    test_sets: &[(String, Dataset)],
    log: &mut dyn Write,
    checkpoint_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    cfg.sample_config().validate(data)?;
    if data.scale != cfg.scale {
        return Err(Error::Config(format!(
            "training data prepared for scale {}, config says {}",
            data.scale, cfg.scale
        )));
    }
    if let Some(dir) = checkpoint_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut out = TrainOutcome {
        trainer: Trainer::new(cfg)?,
        losses: Vec::new(),
        evals: Vec::new(),
        checkpoints: Vec::new(),
    };
    let save = |t: &Trainer, saved: &mut Vec<PathBuf>, name: String| -> Result<()> {
        if let Some(dir) = checkpoint_dir {
            let p = dir.join(name);
            t.save(&p)?;
            saved.push(p);
        }
        Ok(())
    };

    let (mut window_sum, mut window_len) = (0.0, 0u64);
    while out.trainer.iteration() < cfg.iterations {
        let it = out.trainer.iteration();
        let loss = match out.trainer.step(data) {
            Ok(l) => l,
            Err(Error::Divergence { iteration, message }) => {
                let name = format!("diverged-{}", checkpoint_name(iteration));
                save(&out.trainer, &mut out.checkpoints, name)?;
                let _ = log_line(log, &format!("diverged at iter {iteration}: {message}"));
                return Err(Error::Divergence {
                    iteration,
                    message: format!("{message}; last good parameters saved"),
                });
            }
            Err(e) => return Err(e),
        };
        window_sum += loss;
        window_len += 1;
        let done = it + 1;
        if done.is_multiple_of(cfg.log_every) || done == cfg.iterations {
            let mean = window_sum / window_len as f64;
            log_line(log, &format!("iter {done} loss {mean:.8e} lr {:e}", lr_at(it, cfg)))?;
            out.losses.push((done, mean));
            (window_sum, window_len) = (0.0, 0);
        }
        if cfg.eval_every > 0 && (done.is_multiple_of(cfg.eval_every) || done == cfg.iterations) {
            for (name, set) in test_sets {
                let rep = evaluate(out.trainer.network(), set, name)?;
                let point = EvalPoint {
                    iteration: done,
                    set: name.clone(),
                    psnr: rep.mean_psnr(),
                    ssim: rep.mean_ssim(),
                };
                log_line(
                    log,
                    &format!("eval iter {done} set {name} psnr {:.4} ssim {:.4}", point.psnr, point.ssim),
                )?;
                out.evals.push(point);
            }
        }
        if cfg.checkpoint_every > 0 && done.is_multiple_of(cfg.checkpoint_every) && done != cfg.iterations {
            save(&out.trainer, &mut out.checkpoints, checkpoint_name(done))?;
        }
    }
    save(&out.trainer, &mut out.checkpoints, checkpoint_name(out.trainer.iteration()))?;
    Ok(out)
}
