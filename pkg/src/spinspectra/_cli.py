# Copyright 2026 spinspectra Contributors

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at

#      http://www.apache.org/licenses/LICENSE-2.0

# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import importlib
import logging
import sys
from pathlib import Path
from types import ModuleType
from typing import List, Optional, Tuple

import click
import typer

from spinspectra.config import RunConfig, parse_presets, parse_range
from spinspectra.io import load_molecule, read_spectrum, spectrum_to_csv, spectrum_to_json, write_spectrum
from spinspectra.solver import compute_sticks, render_spectrum
from spinspectra.spin_system import DEFAULT_MAX_DIMENSION, DimensionCapError

logger = logging.getLogger(__name__)

EXIT_FORMAT_ERROR = 2
EXIT_DIMENSION_CAP = 3

app = typer.Typer(add_completion=False, help="Simulate NMR spectra of spin-1/2 molecules with exact and cluster solvers.")

MOLECULE = typer.Argument(..., help="Molecule JSON file.")
FIELD = typer.Option(400.0, "--field-mhz", help="Proton reference frequency in MHz.")
FWHM = typer.Option(1.0, "--fwhm-hz", help="Line width (full width at half maximum) in Hz.")
DETECT = typer.Option("1H", "--detect-isotope", help="Detected isotope, or 'all'.")
EPSILON = typer.Option(0.1, "--epsilon", help="Regularizer of the cluster importance metric in rad/s.")
THREADS = typer.Option(None, "--threads", help="Worker threads (default: every CPU).")
GROWTH = typer.Option("max", "--growth", help="Cluster growth rule, 'max' or 'direct'.")
EXACT_THRESHOLD = typer.Option(12, "--exact-threshold", help="Solve exactly up to this many nuclei.")
MAX_DIMENSION = typer.Option(DEFAULT_MAX_DIMENSION, "--max-dimension", help="Largest product space to build.")


def _config(**kwargs) -> RunConfig:
    detect = kwargs.pop("detect_isotope")
    return RunConfig(detect_isotope=None if detect == "all" else detect, **kwargs)


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


@app.callback()
def main(ctx: typer.Context,
         verbose: int = typer.Option(0, "--verbose", "-v", count=True,
                                     help="Log progress to stderr; repeat for debug output.")):
    if verbose:
        logging.basicConfig(level=logging.DEBUG if verbose > 1 else logging.INFO, stream=sys.stderr,
                            format="%(levelname)s %(name)s: %(message)s")
    ctx.obj = {"verbose": verbose}


@app.command()
def simulate(ctx: typer.Context,
             molecule: Path = MOLECULE,
             out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output spectrum file (default stdout)."),
             field_mhz: float = FIELD,
             fwhm_hz: float = FWHM,
             max_cluster: int = typer.Option(12, "--max-cluster", help="Largest cluster size."),
             grid_points: Optional[int] = typer.Option(None, "--points", help="Points of the sampling grid."),
             detect_isotope: str = DETECT,
             epsilon: float = EPSILON,
             exact: bool = typer.Option(False, "--exact", help="Always use the exact solver."),
             threads: Optional[int] = THREADS,
             output_format: str = typer.Option("csv", "--format", help="'csv' or 'json'."),
             exact_threshold: int = EXACT_THRESHOLD,
             growth: str = GROWTH,
             max_dimension: int = MAX_DIMENSION,
             plot: Optional[Path] = typer.Option(None, "--svg", help="Also write an SVG plot here.")):
    """Simulate the spectrum of one molecule."""
    config = _config(field_mhz=field_mhz, fwhm_hz=fwhm_hz, max_cluster=max_cluster, grid_points=grid_points,
                     detect_isotope=detect_isotope, epsilon=epsilon, exact=exact, threads=threads,
                     output_format=output_format, exact_threshold=exact_threshold, growth=growth,
                     max_dimension=max_dimension)
    system = load_molecule(molecule)
    settings = config.to_settings()
    sticks = compute_sticks(system, settings, config.max_cluster, exact=config.exact,
                            exact_threshold=config.exact_threshold, growth=config.growth,
                            reduce_above=config.reduce_above, workers=config.workers)
    spectrum = render_spectrum(sticks, system, settings)
    if out is None:
        _emit(spectrum_to_csv(spectrum) if config.output_format == "csv" else spectrum_to_json(spectrum), None)
    else:
        write_spectrum(spectrum, out, config.output_format)
    if plot is not None:
        from spinspectra.plotting import plot_spectrum
        plot_spectrum(spectrum, plot, title=molecule.stem)
    logger.info("wrote %s (%s path, %d sticks)", out or "stdout", sticks.metadata.get("method"), len(sticks))


@app.command()
def converge(ctx: typer.Context,
             molecule: Path = MOLECULE,
             sizes: Optional[str] = typer.Option(None, "--sizes", help="Cluster sizes, e.g. '1..8' (default 1..N)."),
             presets: str = typer.Option("high:high", "--presets", help="'all' or field:broadening pairs."),
             out: Optional[Path] = typer.Option(None, "--out", "-o", help="Report file (default stdout)."),
             output_format: str = typer.Option("csv", "--format", help="'csv' or 'json'."),
             spectra_dir: Optional[Path] = typer.Option(None, "--spectra-dir", help="Also write every spectrum here."),
             detect_isotope: str = DETECT,
             epsilon: float = EPSILON,
             threads: Optional[int] = THREADS,
             exact_threshold: int = EXACT_THRESHOLD,
             growth: str = GROWTH,
             max_dimension: int = MAX_DIMENSION):
    """Convergence error of the cluster solver against a reference spectrum."""
    from spinspectra.studies import converge as run_converge

    config = _config(detect_isotope=detect_isotope, epsilon=epsilon, threads=threads, output_format=output_format,
                     exact_threshold=exact_threshold, growth=growth, max_dimension=max_dimension)
    system = load_molecule(molecule)
    size_list = parse_range(sizes, system.num_nuclei) if sizes else list(range(1, system.num_nuclei + 1))
    report = run_converge(system, size_list, parse_presets(presets), config,
                          keep_spectra=spectra_dir is not None, progress=ctx.obj["verbose"] > 0)
    _emit(report.to_csv() if config.output_format == "csv" else report.to_json(), out)
    if spectra_dir is not None:
        spectra_dir.mkdir(parents=True, exist_ok=True)
        for (regime, size), spectrum in report.spectra.items():
            name = f"{molecule.stem}_{regime.replace(':', '_')}_{size}.{config.output_format}"
            write_spectrum(spectrum, spectra_dir / name, config.output_format)


@app.command()
def compare(a: Path = typer.Argument(..., help="First spectrum file."),
            b: Path = typer.Argument(..., help="Second spectrum file.")):
    """Print the cosine similarity and the error metric log10(1 - cos) of two spectra."""
    from spinspectra.analysis import cosine_similarity

    report = cosine_similarity(read_spectrum(a), read_spectrum(b))
    sys.stdout.write(f"cos_theta={report.cos_theta!r}\nepsilon={report.epsilon!r}\n")


@app.command()
def bench(ctx: typer.Context,
          molecule: Path = MOLECULE,
          sizes: str = typer.Option(..., "--sizes", help="Cluster sizes, e.g. '2..8'."),
          repeats: int = typer.Option(3, "--repeats", help="Timed runs per size; the median is reported."),
          out: Optional[Path] = typer.Option(None, "--out", "-o", help="CSV file (default stdout)."),
          field_mhz: float = FIELD,
          fwhm_hz: float = FWHM,
          detect_isotope: str = DETECT,
          threads: Optional[int] = THREADS,
          growth: str = GROWTH,
          max_dimension: int = MAX_DIMENSION):
    """Time the cluster solver across cluster sizes."""
    from spinspectra.studies import bench as run_bench

    config = _config(field_mhz=field_mhz, fwhm_hz=fwhm_hz, detect_isotope=detect_isotope, threads=threads,
                     growth=growth, max_dimension=max_dimension)
    system = load_molecule(molecule)
    report = run_bench(system, parse_range(sizes, system.num_nuclei), repeats, config,
                       progress=ctx.obj["verbose"] > 0)
    _emit(report.to_csv(), out)


def _click_exceptions(command) -> Tuple[ModuleType, ...]:
    """The exception modules of plain click and of the click copy ``command`` was built on

    Recent typer releases ship their own copy of click and raise its exception classes.
    """
    modules = [click.exceptions]
    for cls in type(command).__mro__:
        if cls.__module__.endswith(".core") and not cls.__module__.startswith("typer.core"):
            package = cls.__module__.rsplit(".", 1)[0]
            modules.append(importlib.import_module(f"{package}.exceptions"))
            break
    return tuple(modules)


def cli(*, command_line_args: List[str]) -> int:
    """Run the command line interface and return its exit code

    Format and argument errors exit with 2, and a product space above the dimension cap
    exits with 3. Diagnostics go to stderr.
    """
    command = typer.main.get_command(app)
    modules = _click_exceptions(command)
    exit_types = tuple(m.Exit for m in modules)
    usage_types = tuple(m.ClickException for m in modules)
    abort_types = tuple(m.Abort for m in modules)
    try:
        command.main(args=list(command_line_args), prog_name="spinspectra", standalone_mode=False)
    except exit_types as e:
        return e.exit_code
    except usage_types as e:
        e.show()
        return EXIT_FORMAT_ERROR
    except abort_types:
        return 1
    except DimensionCapError as e:
        sys.stderr.write(f"Error: {e}\n")
        return EXIT_DIMENSION_CAP
    except ValueError as e:
        sys.stderr.write(f"Error: {e}\n")
        return EXIT_FORMAT_ERROR
    return 0
