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

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np

from spinspectra._version import __version__
from spinspectra.analysis import Spectrum
from spinspectra.spin_system import ISOTOPES, Isotope, Nucleus, SpinSystem

SCHEMA_VERSION = 1
AXIS_COLUMNS = {"ppm": "delta_ppm", "angular": "omega_rad_s"}


class MoleculeFormatError(ValueError):
    """A molecule file that cannot be turned into a SpinSystem"""


class SpectrumFormatError(ValueError):
    """A spectrum file that cannot be read back"""


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MoleculeFormatError(f"{where} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise MoleculeFormatError(f"{where} must be finite, got {value}")
    return value


def _index(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise MoleculeFormatError(f"{where} must be an integer index, got {value!r}")
    return value


def molecule_from_dict(data: Dict[str, Any]) -> SpinSystem:
    """Build a SpinSystem from a parsed molecule document (schema version 1)

    Examples
    --------
    >>> from spinspectra.io import molecule_from_dict
    >>> molecule_from_dict({"version": 1,
    ...                     "nuclei": [{"label": "Ha", "isotope": "1H", "shift_ppm": 1.0},
    ...                                {"label": "Hb", "isotope": "1H", "shift_ppm": 2.0}],
    ...                     "couplings": [{"i": 0, "j": 1, "j_hz": 10.0}]})
    <spinspectra.SpinSystem object with 2 nuclei and 1 coupling>
    """
    if not isinstance(data, dict):
        raise MoleculeFormatError("A molecule document must be a JSON object")
    if data.get("version") != SCHEMA_VERSION:
        raise MoleculeFormatError(f"Unsupported molecule schema version {data.get('version')!r}, "
                                  f"expected {SCHEMA_VERSION}")
    isotopes = dict(ISOTOPES)
    for k, entry in enumerate(data.get("isotopes", []) or []):
        if not isinstance(entry, dict) or not isinstance(entry.get("symbol"), str):
            raise MoleculeFormatError(f"isotopes[{k}] needs a string 'symbol'")
        try:
            isotopes[entry["symbol"]] = Isotope.from_spin(entry["symbol"],
                                                          _number(entry.get("gamma"), f"isotopes[{k}].gamma"),
                                                          _number(entry.get("spin"), f"isotopes[{k}].spin"))
        except MoleculeFormatError:
            raise
        except ValueError as e:
            raise MoleculeFormatError(f"isotopes[{k}]: {e}") from e

    raw_nuclei = data.get("nuclei")
    if not isinstance(raw_nuclei, list) or not raw_nuclei:
        raise MoleculeFormatError("A molecule needs a non-empty 'nuclei' array")
    nuclei: List[Nucleus] = []
    for k, entry in enumerate(raw_nuclei):
        if not isinstance(entry, dict):
            raise MoleculeFormatError(f"nuclei[{k}] must be an object")
        symbol = entry.get("isotope")
        if symbol not in isotopes:
            raise MoleculeFormatError(f"nuclei[{k}] has unknown isotope {symbol!r}; "
                                      "define it in the 'isotopes' array")
        label = entry.get("label", str(k))
        try:
            nuclei.append(Nucleus.from_ppm(isotopes[symbol], _number(entry.get("shift_ppm"), f"nuclei[{k}].shift_ppm"),
                                           str(label)))
        except MoleculeFormatError:
            raise
        except ValueError as e:
            raise MoleculeFormatError(f"nuclei[{k}]: {e}") from e

    couplings = {}
    for k, entry in enumerate(data.get("couplings", []) or []):
        if not isinstance(entry, dict):
            raise MoleculeFormatError(f"couplings[{k}] must be an object")
        i = _index(entry.get("i"), f"couplings[{k}].i")
        j = _index(entry.get("j"), f"couplings[{k}].j")
        key = (min(i, j), max(i, j))
        if key in couplings:
            raise MoleculeFormatError(f"couplings[{k}] repeats the pair ({i}, {j})")
        couplings[key] = _number(entry.get("j_hz"), f"couplings[{k}].j_hz")
    try:
        return SpinSystem(nuclei, couplings)
    except ValueError as e:
        raise MoleculeFormatError(str(e)) from e


def molecule_to_dict(system: SpinSystem) -> Dict[str, Any]:
    custom = {n.isotope.symbol: n.isotope for n in system.nuclei if ISOTOPES.get(n.isotope.symbol) != n.isotope}
    data: Dict[str, Any] = {
        "version": SCHEMA_VERSION,
        "nuclei": [{"label": n.label, "isotope": n.isotope.symbol, "shift_ppm": n.shift_ppm} for n in system.nuclei],
        "couplings": [{"i": k, "j": l, "j_hz": j} for (k, l), j in system.couplings.items()],
    }
    if custom:
        data["isotopes"] = [{"symbol": s, "gamma": iso.gamma, "spin": iso.spin} for s, iso in sorted(custom.items())]
    return data


def load_molecule(path: Union[str, Path]) -> SpinSystem:
    """Read a molecule JSON file

    Raises
    ------
    MoleculeFormatError
        If the file is not valid JSON or does not follow the schema.
    """
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise MoleculeFormatError(f"{path} is not valid JSON: {e}") from e
    except OSError as e:
        raise MoleculeFormatError(f"Cannot read {path}: {e}") from e
    return molecule_from_dict(data)


def save_molecule(system: SpinSystem, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(molecule_to_dict(system), f, indent=2)
        f.write("\n")


def spectrum_to_csv(spectrum: Spectrum) -> str:
    """CSV text with a version comment line; ppm spectra are written in descending order"""
    points, amplitudes = spectrum.points, spectrum.amplitudes
    if spectrum.axis == "ppm":
        points, amplitudes = points[::-1], amplitudes[::-1]
    lines = [f"# spinspectra {__version__}", f"{AXIS_COLUMNS[spectrum.axis]},amplitude"]
    lines.extend(f"{float(x)!r},{float(y)!r}" for x, y in zip(points, amplitudes))
    return "\n".join(lines) + "\n"


def spectrum_to_json(spectrum: Spectrum) -> str:
    document = {
        "format": "spinspectra-spectrum",
        "version": __version__,
        "axis": spectrum.axis,
        "eta": spectrum.eta,
        "normalized": spectrum.normalized,
        "points": [float(x) for x in spectrum.points],
        "amplitudes": [float(y) for y in spectrum.amplitudes],
    }
    return json.dumps(document) + "\n"


def write_spectrum(spectrum: Spectrum, path: Union[str, Path], fmt: str = "csv") -> None:
    if fmt not in ("csv", "json"):
        raise ValueError(f"Unknown spectrum format {fmt!r}, expected 'csv' or 'json'")
    text = spectrum_to_csv(spectrum) if fmt == "csv" else spectrum_to_json(spectrum)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def _ordered(points: np.ndarray, amplitudes: np.ndarray, axis: str, eta=None, normalized=False) -> Spectrum:
    if len(points) > 1 and points[0] > points[-1]:
        points, amplitudes = points[::-1], amplitudes[::-1]
    try:
        return Spectrum(points=points, amplitudes=amplitudes, axis=axis, eta=eta, normalized=normalized)
    except ValueError as e:
        raise SpectrumFormatError(str(e)) from e


def spectrum_from_csv(text: str) -> Spectrum:
    rows = [line.strip() for line in text.splitlines()]
    rows = [line for line in rows if line and not line.startswith("#")]
    if not rows:
        raise SpectrumFormatError("Empty spectrum file")
    columns = {column: axis for axis, column in AXIS_COLUMNS.items()}
    header = rows[0].split(",")
    if len(header) != 2 or header[1] != "amplitude" or header[0] not in columns:
        raise SpectrumFormatError(f"Unrecognized spectrum header {rows[0]!r}")
    try:
        values = np.array([[float(v) for v in row.split(",")] for row in rows[1:]], dtype=np.float64)
    except ValueError as e:
        raise SpectrumFormatError(f"Malformed spectrum row: {e}") from e
    if values.ndim != 2 or values.shape[1] != 2:
        raise SpectrumFormatError("Every spectrum row needs exactly two columns")
    return _ordered(values[:, 0], values[:, 1], columns[header[0]])


def spectrum_from_json(text: str) -> Spectrum:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpectrumFormatError(f"Spectrum is not valid JSON: {e}") from e
    if not isinstance(document, dict) or document.get("format") != "spinspectra-spectrum":
        raise SpectrumFormatError("Not a spinspectra spectrum document")
    try:
        points = np.array(document["points"], dtype=np.float64)
        amplitudes = np.array(document["amplitudes"], dtype=np.float64)
        axis = document["axis"]
    except (KeyError, TypeError, ValueError) as e:
        raise SpectrumFormatError(f"Incomplete spectrum document: {e}") from e
    return _ordered(points, amplitudes, axis, document.get("eta"), bool(document.get("normalized", False)))


def read_spectrum(path: Union[str, Path]) -> Spectrum:
    """Read a spectrum written by `write_spectrum`; ``.json`` files are JSON, anything else CSV"""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise SpectrumFormatError(f"Cannot read {path}: {e}") from e
    return spectrum_from_json(text) if path.suffix.lower() == ".json" else spectrum_from_csv(text)
