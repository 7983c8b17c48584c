"""Run configuration: environment defaults, logging and INI config files.

Precedence, lowest to highest: preset defaults, the ``--config`` file, then
command-line flags. Environment variables only supply ambient defaults.
"""

import configparser
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Union

from dotenv import load_dotenv
from pydantic import ValidationError

from src.errors import ConfigurationError, ImageFormatError
from src.export import read_pgm
from src.models import DensitySpec, ImageGrid, NoiseSpec, ProblemSpec, TrainConfig

logger = logging.getLogger(__name__)

DEFAULT_OUT_DIR = "./runs"
DEFAULT_LOG_LEVEL = "INFO"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

CONFIG_KEYS: dict[str, dict[str, str]] = {
    "problem": {
        "eta": "growth/transport balance; 0 selects OT mode unless mode is given",
        "mode": "OT or UOT",
        "lambda_c": "continuity residual weight",
        "lambda_hj": "Hamilton-Jacobi residual weight",
        "lambda_ic": "endpoint residual weight",
        "lambda_bc": "boundary flux weight (boxes only)",
        "n_time": "number of time nodes including both ends",
    },
    "domain": {
        "bounds": "box bounds as lo,hi;lo,hi",
        "grid_shape": "box cells per axis as n1,n2",
        "grid_resolution": "isosurface sampling resolution (surfaces)",
        "embed_4d": "rotate the surface into R^4 (true/false)",
        "noise_x": "relative point noise in [0, 1]",
        "noise_n": "relative normal noise in [0, 1]",
        "noise_seed": "seed for the noise draw",
        "cloud_file": "point-cloud CSV replacing isosurface sampling",
    },
    "densities": {
        "rho0_image": "28x28 PGM for the initial density",
        "rho1_image": "28x28 PGM for the target density",
        "image_scale": "density value of a full-intensity pixel",
    },
    "train": {
        "learning_rate": "Adam step size",
        "beta1": "Adam first-moment decay",
        "beta2": "Adam second-moment decay",
        "eps_adam": "Adam denominator offset",
        "max_iters": "iteration cap",
        "stop_threshold": "stop once the total loss falls below this",
        "log_interval": "iterations between logged loss rows",
        "seed": "seed for networks and collocation",
        "hidden_layers": "hidden layers per network",
        "width": "units per hidden layer",
    },
}


# =============================================================================
# Environment
# =============================================================================


@dataclass
class Settings:
    out_dir: str = DEFAULT_OUT_DIR
    log_level: str = DEFAULT_LOG_LEVEL
    num_threads: Optional[int] = None


def load_settings() -> Settings:
    """Read ambient defaults from the environment (and a ``.env`` file if present)."""
    load_dotenv()
    threads = os.getenv("UOT_NUM_THREADS")
    try:
        num_threads = int(threads) if threads else None
    except ValueError:
        raise ConfigurationError(f"UOT_NUM_THREADS must be an integer, got {threads!r}") from None
    return Settings(
        out_dir=os.getenv("UOT_OUT_DIR", DEFAULT_OUT_DIR),
        log_level=os.getenv("UOT_LOG_LEVEL", DEFAULT_LOG_LEVEL).upper(),
        num_threads=num_threads,
    )


def configure_logging(level: str = DEFAULT_LOG_LEVEL) -> None:
    numeric = logging.getLevelName(level.upper())
    if not isinstance(numeric, int):
        raise ConfigurationError(f"Unknown log level: {level}")
    logging.basicConfig(level=numeric, format=LOG_FORMAT, force=True)


# =============================================================================
# Config Files
# =============================================================================


def _pairs(text: str) -> list[tuple[float, float]]:
    pairs = []
    for chunk in text.split(";"):
        lo, hi = (float(v) for v in chunk.split(","))
        pairs.append((lo, hi))
    return pairs


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",")]


def _resolve(path: str, base: Path) -> Path:
    candidate = Path(path).expanduser()
    return candidate if candidate.is_absolute() else base / candidate


def _read_parser(path: Union[str, Path]) -> configparser.ConfigParser:
    parser = configparser.ConfigParser()
    try:
        with open(path) as f:
            parser.read_file(f)
    except OSError as exc:
        raise ConfigurationError(f"Cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigurationError(f"Malformed config file {path}: {exc}") from exc

    for section in parser.sections():
        if section not in CONFIG_KEYS:
            raise ConfigurationError(
                f"Unknown config section [{section}]", {"sections": list(CONFIG_KEYS)}
            )
        unknown = set(parser[section]) - set(CONFIG_KEYS[section])
        if unknown:
            raise ConfigurationError(
                f"Unknown keys in [{section}]: {', '.join(sorted(unknown))}",
                {"keys": sorted(CONFIG_KEYS[section])},
            )
    return parser


def _problem_updates(section: configparser.SectionProxy) -> dict[str, Any]:
    updates: dict[str, Any] = {}
    for key in ("eta", "lambda_c", "lambda_hj", "lambda_ic", "lambda_bc"):
        if key in section:
            updates[key] = section.getfloat(key)
    if "n_time" in section:
        updates["n_time"] = section.getint("n_time")
    if "mode" in section:
        updates["mode"] = section["mode"].strip().upper()
    elif "eta" in updates:
        updates["mode"] = "OT" if updates["eta"] == 0 else "UOT"
    return updates


def _domain_updates(
    section: configparser.SectionProxy, domain: dict[str, Any], base: Path
) -> dict[str, Any]:
    domain = dict(domain)
    box_keys = {"bounds", "grid_shape"}
    cloud_keys = set(CONFIG_KEYS["domain"]) - box_keys
    present = set(section)
    if domain["kind"] == "euclidean_box" and present & cloud_keys:
        raise ConfigurationError(
            f"Surface keys {sorted(present & cloud_keys)} given for a box domain"
        )
    if domain["kind"] == "point_cloud" and present & box_keys:
        raise ConfigurationError(f"Box keys {sorted(present & box_keys)} given for a surface")

    if "bounds" in section:
        domain["bounds"] = _pairs(section["bounds"])
    if "grid_shape" in section:
        domain["grid_shape"] = _ints(section["grid_shape"])
    if "grid_resolution" in section:
        domain["grid_resolution"] = section.getint("grid_resolution")
    if "embed_4d" in section:
        domain["embed_4d"] = section.getboolean("embed_4d")
    if "cloud_file" in section:
        domain["cloud_file"] = str(_resolve(section["cloud_file"], base))
    if present & {"noise_x", "noise_n", "noise_seed"}:
        noise = dict(domain.get("noise") or NoiseSpec().model_dump())
        if "noise_x" in section:
            noise["omega_x"] = section.getfloat("noise_x")
        if "noise_n" in section:
            noise["omega_n"] = section.getfloat("noise_n")
        if "noise_seed" in section:
            noise["seed"] = section.getint("noise_seed")
        domain["noise"] = noise
    return domain


def _density_updates(
    section: configparser.SectionProxy, data: dict[str, Any], base: Path
) -> dict[str, Any]:
    scale = section.getfloat("image_scale") if "image_scale" in section else None
    for label in ("rho0", "rho1"):
        key = f"{label}_image"
        if key in section:
            try:
                pixels = read_pgm(_resolve(section[key], base))
            except (OSError, ImageFormatError) as exc:
                raise ConfigurationError(f"Cannot load {key}: {exc}") from exc
            image = ImageGrid(pixels=pixels.tolist())
            data[label] = DensitySpec(kind="image_grid", image=image).model_dump()
        if scale is not None:
            if data[label]["kind"] != "image_grid":
                raise ConfigurationError(f"image_scale given but {label} is not an image density")
            data[label]["image"]["intensity_scale"] = scale
    return data


def load_config_file(
    path: Union[str, Path], spec: ProblemSpec, train: TrainConfig
) -> tuple[ProblemSpec, TrainConfig]:
    """Apply an INI config file on top of a preset and training defaults.

    Raises:
        ConfigurationError: For unreadable files, unknown sections or keys,
            unparsable values, or values rejected by model validation.
    """
    path = Path(path)
    parser = _read_parser(path)
    base = path.parent
    problem = spec.model_dump()
    training = train.model_dump()

    try:
        if parser.has_section("problem"):
            updates = _problem_updates(parser["problem"])
            # lambda_bc follows lambda_ic unless set on its own
            if "lambda_ic" in updates and "lambda_bc" not in updates:
                if spec.lambda_bc == spec.lambda_ic:
                    updates["lambda_bc"] = None
            problem.update(updates)
        if parser.has_section("domain"):
            problem["domain"] = _domain_updates(parser["domain"], problem["domain"], base)
        if parser.has_section("densities"):
            problem = _density_updates(parser["densities"], problem, base)
        if parser.has_section("train"):
            section = parser["train"]
            for key in CONFIG_KEYS["train"]:
                if key in section:
                    field_type = type(training[key])
                    training[key] = (
                        section.getint(key) if field_type is int else section.getfloat(key)
                    )
    except ValueError as exc:
        raise ConfigurationError(f"Invalid value in {path}: {exc}") from exc

    try:
        new_spec = ProblemSpec.model_validate(problem)
        new_train = TrainConfig.model_validate(training)
    except ValidationError as exc:
        raise ConfigurationError(
            f"Config file {path} produced an invalid problem", {"errors": exc.errors()}
        ) from exc
    logger.info("Applied config file %s", path)
    return new_spec, new_train


def apply_overrides(
    train: TrainConfig, seed: Optional[int] = None, iters: Optional[int] = None
) -> TrainConfig:
    """Command-line overrides for the seed and the iteration cap."""
    updates: dict[str, Any] = {}
    if seed is not None:
        updates["seed"] = seed
    if iters is not None:
        updates["max_iters"] = iters
    try:
        return TrainConfig.model_validate({**train.model_dump(), **updates})
    except ValidationError as exc:
        raise ConfigurationError("Invalid command-line override", {"errors": exc.errors()}) from exc
