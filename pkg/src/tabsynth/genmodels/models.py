"""Configuration and network containers for the conditional GANs."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ..data import FeatureSchema, ScalerParams
from ..numerics import MlpParams, MlpSpec, SeededRng, init_mlp, mlp_forward

VARIANTS = ("f2gan", "cgan", "wgan_gp")
GENERATOR_OBJECTIVES = ("saturating", "nonsaturating")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GanConfig:
    """All hyperparameters of one training run.

    An ``f2gan`` config whose two feedback weights are both zero is the plain
    conditional GAN, and is stored as ``variant="cgan"`` so that the two
    spellings produce identical runs and identical model files.
    """
    variant: str = "f2gan"
    latent_dim: int = 64
    gen_hidden: tuple = (128, 256)
    disc_hidden: tuple = (256, 128)
    lambda_mv: float = 1.0
    lambda_corr: float = 0.01
    label_smoothing: float = 0.9
    clip: float = 0.5
    batch_size: int = 64
    epochs: int = 500
    lr: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    eps: float = 1e-8
    gp_weight: float = 10.0
    critic_steps: int = 5
    generator_objective: str = "saturating"
    seed: int = 0

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("gen_hidden", tuple(int(h) for h in self.gen_hidden))
        set_("disc_hidden", tuple(int(h) for h in self.disc_hidden))
        # 0 and 0.0 must give the same model file
        for name in ("lambda_mv", "lambda_corr", "label_smoothing", "clip", "lr",
                     "beta1", "beta2", "eps", "gp_weight"):
            set_(name, float(getattr(self, name)))
        for name in ("latent_dim", "batch_size", "epochs", "critic_steps", "seed"):
            set_(name, int(getattr(self, name)))
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.generator_objective not in GENERATOR_OBJECTIVES:
            raise ConfigError(f"unknown generator objective {self.generator_objective!r}")
        if self.lambda_mv < 0 or self.lambda_corr < 0:
            raise ConfigError("feedback weights must be non-negative")
        if self.variant == "cgan" and (self.lambda_mv or self.lambda_corr):
            raise ConfigError("variant 'cgan' requires lambda_mv = lambda_corr = 0")
        if self.variant == "f2gan" and self.lambda_mv == 0 and self.lambda_corr == 0:
            set_("variant", "cgan")
        if not 0.0 < self.label_smoothing <= 1.0:
            raise ConfigError("label_smoothing must lie in (0, 1]")
        if self.clip <= 0:
            raise ConfigError("clip threshold must be positive")
        for name in ("latent_dim", "batch_size", "critic_steps"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if not self.gen_hidden or not self.disc_hidden or min(self.gen_hidden + self.disc_hidden) < 1:
            raise ConfigError("hidden layer lists must be non-empty with positive widths")

    @classmethod
    def baseline(cls, variant: str, **overrides) -> "GanConfig":
        """Config for ``variant`` with the feedback weights zeroed unless it is f2gan."""
        if variant != "f2gan":
            overrides.setdefault("lambda_mv", 0.0)
            overrides.setdefault("lambda_corr", 0.0)
        return cls(variant=variant, **overrides)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gen_hidden"] = list(self.gen_hidden)
        d["disc_hidden"] = list(self.disc_hidden)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GanConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown GAN config key(s): {', '.join(unknown)}")
        return cls(**d)


@dataclass
class GeneratorModel:
    """G(z, y): latent vector and one-hot label in, tanh-bounded features out."""
    spec: MlpSpec
    params: MlpParams
    latent_dim: int
    n_classes: int

    @classmethod
    def build(cls, latent_dim, n_classes, n_features, hidden, rng: SeededRng):
        spec = MlpSpec((latent_dim + n_classes, *hidden, n_features), "tanh")
        return cls(spec, init_mlp(spec, rng), latent_dim, n_classes)

    def forward(self, z, y):
        return mlp_forward(self.params, self.spec, np.hstack([z, one_hot(y, self.n_classes)]))


@dataclass
class DiscriminatorModel:
    """D(x, y): one trunk, a scalar logit head and the last hidden layer as f(x, y)."""
    spec: MlpSpec
    params: MlpParams
    n_features: int
    n_classes: int

    @classmethod
    def build(cls, n_features, n_classes, hidden, rng: SeededRng):
        spec = MlpSpec((n_features + n_classes, *hidden, 1), "linear")
        return cls(spec, init_mlp(spec, rng), n_features, n_classes)

    @property
    def feature_layer(self) -> int:
        return self.spec.n_layers - 2

    def inputs(self, x, y):
        return np.hstack([x, one_hot(y, self.n_classes)])

    def forward(self, x, y):
        """Returns ``(logits (n,), features (n, h), cache)``."""
        out, cache = mlp_forward(self.params, self.spec, self.inputs(x, y))
        return out[:, 0], cache.hidden[-1], cache


@dataclass
class TrainingLog:
    epoch: list = field(default_factory=list)
    loss_d: list = field(default_factory=list)
    loss_adv: list = field(default_factory=list)
    loss_mv: list = field(default_factory=list)
    loss_corr: list = field(default_factory=list)
    loss_g: list = field(default_factory=list)

    COLUMNS = ("epoch", "L_D", "L_adv", "L_MV", "L_corr", "L_G")

    def __len__(self):
        return len(self.epoch)

    def append(self, epoch, d, adv, mv, corr, g):
        self.epoch.append(int(epoch))
        self.loss_d.append(float(d))
        self.loss_adv.append(float(adv))
        self.loss_mv.append(float(mv))
        self.loss_corr.append(float(corr))
        self.loss_g.append(float(g))

    def rows(self):
        return list(zip(self.epoch, self.loss_d, self.loss_adv, self.loss_mv,
                        self.loss_corr, self.loss_g))


@dataclass
class TrainedGan:
    config: GanConfig
    generator: GeneratorModel
    discriminator: DiscriminatorModel
    scaler: ScalerParams
    class_names: tuple
    schema: FeatureSchema
    log: TrainingLog

    @property
    def n_classes(self) -> int:
        return len(self.class_names)


def one_hot(y, n_classes: int):
    y = np.asarray(y, dtype=np.int64)
    out = np.zeros((y.size, n_classes))
    out[np.arange(y.size), y] = 1.0
    return out
