import json
from pathlib import Path

import numpy as np
import typer
import tqdm

from spinspectra.io import molecule_to_dict
from spinspectra.spin_system import ISOTOPES, Nucleus, SpinSystem


def random_molecule(num_spins: int,
                    rng: np.random.Generator,
                    shift_range: float = 8.0,
                    coupling_probability: float = 0.3,
                    max_coupling: float = 15.0,
                    methyl_fraction: float = 0.0) -> SpinSystem:
    """Random proton network, optionally with methyl-like groups of three equivalent spins"""
    h = ISOTOPES["1H"]
    shifts = list(rng.uniform(0.5, 0.5 + shift_range, size=num_spins))
    owner = list(range(num_spins))
    num_methyls = int(methyl_fraction * num_spins) // 3
    for g in range(num_methyls):
        for k in range(3):
            shifts[3 * g + k] = shifts[3 * g]
            owner[3 * g + k] = 3 * g
    nuclei = [Nucleus.from_ppm(h, float(s), f"H{i + 1}") for i, s in enumerate(shifts)]
    # draw one coupling per pair of owners so that methyl members couple identically
    drawn = {}
    couplings = {}
    for i in range(num_spins):
        for j in range(i + 1, num_spins):
            a, b = owner[i], owner[j]
            if a == b:
                continue
            key = (min(a, b), max(a, b))
            if key not in drawn:
                drawn[key] = float(rng.uniform(-max_coupling, max_coupling)) \
                    if rng.random() < coupling_probability else 0.0
            if drawn[key] != 0.0:
                couplings[(i, j)] = round(drawn[key], 3)
    return SpinSystem(nuclei, couplings)


def main(out_dir: Path,
         num_spins: int = typer.Option(10, help="Spins per molecule."),
         count: int = typer.Option(1, help="Number of molecules to write."),
         seed: int = typer.Option(0, help="Seed of the random generator."),
         coupling_probability: float = typer.Option(0.3, help="Probability that a pair is coupled."),
         max_coupling: float = typer.Option(15.0, help="Largest |J| in Hz."),
         methyl_fraction: float = typer.Option(0.0, help="Share of spins placed in methyl-like groups.")):
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    for k in tqdm.tqdm(range(count)):
        system = random_molecule(num_spins, rng, coupling_probability=coupling_probability,
                                 max_coupling=max_coupling, methyl_fraction=methyl_fraction)
        with open(out_dir / f"random_{num_spins}_{seed}_{k}.json", "w", encoding="utf-8") as f:
            json.dump(molecule_to_dict(system), f, indent=2)


if __name__ == "__main__":
    typer.run(main)
