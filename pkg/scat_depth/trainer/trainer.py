import logging
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from scat_depth.autograd import ops
from scat_depth.autograd.tensor import Tape, Tensor
from scat_depth.errors import NumericalAbort
from scat_depth.geometry import CameraModel, disp_to_depth, inverse_warp
from scat_depth.networks.factory import create_depth_network, create_generator, create_pose_network
from scat_depth.optim.factory import create_optimizer
from scat_depth.perturbation.factory import create_perturbation
from scat_depth.photometric import Warp, adversarial_loss, total_clean_objective
from scat_depth.surgery.buffer import GeneratorBuffer
from scat_depth.surgery.factory import create_combiner
from scat_depth.surgery.flat import FlatGradient
from scat_depth.surgery.stats import GRAD_STATS_HEADER, record_stats
from scat_depth.synthworld.scene import SceneSample, to_batch
from scat_depth.trainer.config import TrainConfig
from scat_depth.types import TRAIN_LOG_HEADER, AscentTrace, FitResult, StepReport
from scat_depth.utils.logs import CsvLog
from scat_depth.utils.utils import time_it

logger = logging.getLogger(__name__)

DEPTH_PREFIX = "depth."
POSE_PREFIX = "pose."
MAX_CONSECUTIVE_REJECTIONS = 3

# (frame t-1, frame t, frame t+1), each [N,3,H,W]
Triplet = Tuple[Tensor, Tensor, Tensor]


class SCATTrainer:
    """Min-max training of depth and pose networks against a perturbation source.

    Each step computes the clean gradient and one gradient per adversarial
    branch on separate tapes, merges them with the configured combiner, takes
    a descent step on depth/pose and an ascent step on the live generator.
    Every branch reconstructs the unperturbed frame t from the unperturbed
    source frames; perturbations only reach the network inputs.
    """

    def __init__(self, config: TrainConfig, camera: CameraModel):
        self.config = config
        self.camera = camera
        self.weights = config.loss_weights()

        self.depth_net = create_depth_network(config)
        self.pose_net = create_pose_network(config)
        self.generator = create_generator(config, camera.height, camera.width)
        self.buffer = GeneratorBuffer(config.buffer_capacity, rng_seed=config.seed + 3)
        self.perturbation = create_perturbation(config, self.generator, self.buffer)
        self.combiner = create_combiner("cgs" if config.enable_cgs else "plain")

        self.opt_depth = create_optimizer(config.optimizer, config.lr_theta)
        self.opt_pose = create_optimizer(config.optimizer, config.lr_theta)
        self.opt_generator = create_optimizer(config.optimizer, config.lr_phi, maximize=True)

        self.epoch = 0
        self.step_count = 0
        self.rollbacks = 0
        self._consecutive_rejections = 0
        self.train_log = CsvLog(TRAIN_LOG_HEADER)
        self.grad_stats = CsvLog(GRAD_STATS_HEADER)

        logger.info(
            f"Trainer ready: depth {self.depth_net.num_parameters()} params (kappa={self.depth_net.kappa[0]}), "
            f"pose {self.pose_net.num_parameters()}, generator {self.generator.num_parameters()} "
            f"(epsilon={self.generator.epsilon:.3f}), perturbation={config.perturbation}, "
            f"combiner={type(self.combiner).__name__}"
        )

    def attach_logs(self, train_log: CsvLog, grad_stats: CsvLog) -> None:
        self.train_log = train_log
        self.grad_stats = grad_stats

    def theta_parameters(self) -> Dict[str, Tensor]:
        named = {f"{DEPTH_PREFIX}{n}": t for n, t in self.depth_net.parameters().items()}
        named.update({f"{POSE_PREFIX}{n}": t for n, t in self.pose_net.parameters().items()})
        return named

    def blend(self) -> float:
        """Progressive adversarial weight min(1, epoch / warmup epochs)."""
        warmup = self.config.blend_warmup_fraction * self.config.epochs
        if warmup <= 0:
            return 1.0
        return min(1.0, self.epoch / warmup)

    def _synthesize(self, inputs: Triplet, clean: Triplet) -> Tuple[Tensor, List[Warp]]:
        prev_in, target_in, next_in = inputs
        disp = self.depth_net(target_in)
        depth = disp_to_depth(disp, self.config.min_depth, self.config.max_depth)
        warped = []
        for source_in, source in ((prev_in, clean[0]), (next_in, clean[2])):
            pose = self.pose_net(target_in, source_in)
            warped.append(inverse_warp(source, depth, pose, self.camera))
        return disp, warped

    def _identity(self, batch: Triplet) -> Optional[List[Tensor]]:
        return [batch[0], batch[2]] if self.config.auto_mask else None

    def _clean_gradient(self, batch: Triplet) -> Tuple[FlatGradient, float]:
        theta = self.theta_parameters()
        with Tape() as tape:
            disp, warped = self._synthesize(batch, batch)
            loss = total_clean_objective(
                batch[1], warped, disp, self.weights, self.config.min_reprojection, self._identity(batch)
            )
            tape.backward(loss)
        return FlatGradient.from_named(tape.gradients(theta), names=theta), loss.item()

    def _adversarial_branches(self, batch: Triplet, deltas: List[Tensor]) -> List[Tuple[Triplet, Triplet]]:
        if not deltas:
            return []
        if self.config.mix_batch:
            inputs = tuple(ops.concat([frame + d for d in deltas], axis=0) for frame in batch)
            clean = tuple(ops.concat([frame] * len(deltas), axis=0) for frame in batch)
            return [(inputs, clean)]
        return [(tuple(frame + d for frame in batch), batch) for d in deltas]

    def _adversarial_gradients(self, batch: Triplet, deltas: List[Tensor]) -> Tuple[List[FlatGradient], List[float]]:
        theta = self.theta_parameters()
        grads, losses = [], []
        for inputs, clean in self._adversarial_branches(batch, deltas):
            with Tape() as tape:
                _, warped = self._synthesize(inputs, clean)
                loss = adversarial_loss(
                    clean[1], warped, self.weights, self.config.min_reprojection, self._identity(clean)
                )
                tape.backward(loss)
            grads.append(FlatGradient.from_named(tape.gradients(theta), names=theta))
            losses.append(loss.item())
        return grads, losses

    def _live_branch(self, batch: Triplet, step: int) -> Tuple[Dict[str, np.ndarray], float, float]:
        """Gradient of L_AD w.r.t. the live generator, the loss, and the mean per-image delta norm."""
        params = self.generator.parameters()
        with Tape() as tape:
            delta = self.perturbation.live(batch[1], step)
            inputs = tuple(frame + delta for frame in batch)
            _, warped = self._synthesize(inputs, batch)
            loss = adversarial_loss(
                batch[1], warped, self.weights, self.config.min_reprojection, self._identity(batch)
            )
            tape.backward(loss)
        d = delta.numpy().astype(np.float64)
        delta_norm = float(np.linalg.norm(d.reshape(d.shape[0], -1), axis=1).mean())
        return tape.gradients(params), loss.item(), delta_norm

    def _capture(self) -> Dict[str, Any]:
        return {
            "depth": self.depth_net.state_dict(),
            "pose": self.pose_net.state_dict(),
            "generator": self.generator.state_dict(),
            "opt_depth": self.opt_depth.state_dict(),
            "opt_pose": self.opt_pose.state_dict(),
            "opt_generator": self.opt_generator.state_dict(),
            "buffer_rng": self.buffer.rng_state(),
        }

    def _restore(self, saved: Dict[str, Any]) -> None:
        self.depth_net.load_state_dict(saved["depth"])
        self.pose_net.load_state_dict(saved["pose"])
        self.generator.load_state_dict(saved["generator"])
        self.opt_depth.load_state_dict(saved["opt_depth"])
        self.opt_pose.load_state_dict(saved["opt_pose"])
        self.opt_generator.load_state_dict(saved["opt_generator"])
        self.buffer.set_rng_state(saved["buffer_rng"])

    def _reject(self, step: int, reason: str, saved: Dict[str, Any]) -> StepReport:
        self._restore(saved)
        self.rollbacks += 1
        self._consecutive_rejections += 1
        logger.warning(f"Step {step} rejected ({reason}); parameters rolled back")
        if self._consecutive_rejections >= MAX_CONSECUTIVE_REJECTIONS:
            raise NumericalAbort(
                f"{self._consecutive_rejections} consecutive non-finite steps, last at step {step}: {reason}. "
                f"Try a smaller lr_theta/lr_phi or epsilon_m, or enable_cgs/enable_sdn."
            )
        return StepReport(step=step, loss_p=float("nan"), loss_ad=float("nan"), rejected=True)

    def _params_finite(self) -> bool:
        modules = (self.depth_net, self.pose_net, self.generator)
        return all(np.isfinite(t.data).all() for m in modules for t in m.parameters().values())

    def train_step(self, batch: Triplet) -> StepReport:
        """One min-max step on a (t-1, t, t+1) batch.

        A non-finite loss, gradient or updated parameter rejects the step and
        restores the state from before it.
        """
        self.step_count += 1
        step = self.step_count
        saved = self._capture()
        config = self.config

        g_clean, clean_loss = self._clean_gradient(batch)

        g_adv: List[FlatGradient] = []
        adv_losses: List[float] = []
        g_phi: Optional[Dict[str, np.ndarray]] = None
        live_loss: Optional[float] = None
        if config.enable_ada:
            deltas = self.perturbation.sample(batch[1], config.sample_j, step)
            g_adv, adv_losses = self._adversarial_gradients(batch, deltas)
            if self.perturbation.learnable:
                g_phi, live_loss, _ = self._live_branch(batch, step)

        g_update, stats = self.combiner.combine(g_clean, g_adv, self.blend())

        losses = [clean_loss] + adv_losses + ([live_loss] if live_loss is not None else [])
        if not np.isfinite(losses).all():
            return self._reject(step, "non-finite loss", saved)
        if not g_update.is_finite() or (g_phi is not None and not all(np.isfinite(g).all() for g in g_phi.values())):
            return self._reject(step, "non-finite gradient", saved)

        self.opt_depth.step(self.depth_net, g_update.subset(DEPTH_PREFIX))
        self.opt_pose.step(self.pose_net, g_update.subset(POSE_PREFIX))
        phi_norm = 0.0
        if g_phi is not None:
            self.opt_generator.step(self.generator, g_phi)
            phi_norm = float(np.sqrt(sum(float(np.sum(g.astype(np.float64) ** 2)) for g in g_phi.values())))

        if not self._params_finite():
            return self._reject(step, "non-finite parameters after update", saved)
        self._consecutive_rejections = 0

        if live_loss is not None:
            loss_ad = live_loss
        elif adv_losses:
            loss_ad = float(np.mean(adv_losses))
        else:
            loss_ad = 0.0
        loss_p = clean_loss + (float(np.mean(adv_losses)) if adv_losses else 0.0)

        effective = stats.effective
        report = StepReport(
            step=step,
            loss_p=loss_p,
            loss_ad=loss_ad,
            mean_cos=effective.mean_cosine,
            frac_neg=effective.fraction_negative,
            grad_norm_theta=g_update.norm(),
            grad_norm_phi=phi_norm,
            stats=stats,
        )
        self.train_log.append(report.as_row())
        record_stats(effective, self.grad_stats, step)
        logger.debug(
            f"step {step}: L_p={loss_p:.5f} L_AD={loss_ad:.5f} branches={len(g_adv)} "
            f"cos={effective.mean_cosine:+.3f} |g|={report.grad_norm_theta:.3e}"
        )

        every = config.snapshot_every_steps
        if config.enable_ada and every and step % every == 0:
            self.perturbation.snapshot(step)
        return report

    def end_epoch(self) -> None:
        self.epoch += 1
        if self.config.enable_ada and not self.config.snapshot_every_steps:
            self.perturbation.snapshot(self.epoch)

    @time_it
    def fit(
        self,
        scenes: Sequence[SceneSample],
        epochs: Optional[int] = None,
        show_progress: bool = False,
        on_epoch_end: Optional[Callable[["SCATTrainer"], None]] = None,
    ) -> FitResult:
        """Train for ``epochs`` passes over ``scenes`` in seeded shuffled order."""
        if not scenes:
            raise ValueError("fit() needs at least one training scene")
        epochs = self.config.epochs if epochs is None else epochs
        batch_size = self.config.batch_size
        reports: List[StepReport] = []
        rollbacks_before = self.rollbacks

        logger.info(f"Training {epochs} epochs over {len(scenes)} scenes (batch {batch_size})")
        for _ in tqdm(range(epochs), desc="Training", disable=not show_progress):
            order = np.random.default_rng([self.config.seed, self.epoch]).permutation(len(scenes))
            for start in range(0, len(scenes), batch_size):
                batch = to_batch([scenes[int(i)] for i in order[start:start + batch_size]])
                reports.append(self.train_step(batch))
            self.end_epoch()
            if on_epoch_end is not None:
                on_epoch_end(self)
            logger.info(f"Epoch {self.epoch} done; buffer {len(self.buffer)}, rollbacks {self.rollbacks}")

        return FitResult(
            epochs=epochs, steps=len(reports), rollbacks=self.rollbacks - rollbacks_before, reports=reports
        )

    def generator_ascent_check(self, batch: Triplet, steps: int) -> AscentTrace:
        """L_AD after each of ``steps`` ascent steps on the live generator.

        Depth and pose stay fixed and the same noise seed is used throughout.
        The generator and its optimizer are restored afterwards.
        """
        if not self.perturbation.learnable:
            raise ValueError(f"Perturbation '{self.config.perturbation}' has no generator to ascend")
        saved = self._capture()
        losses, norms = [], []
        try:
            for k in range(steps + 1):
                grads, loss, delta_norm = self._live_branch(batch, step=0)
                losses.append(loss)
                norms.append(delta_norm)
                if k < steps:
                    self.opt_generator.step(self.generator, grads)
        finally:
            self._restore(saved)
        return AscentTrace(losses=losses, delta_norms=norms)
