"""Cut the singlet's layers into site pieces, write them as restriction files, glue back.

    python scripts/separability_demo.py [outdir]
"""

import sys
from pathlib import Path

import numpy as np

from layerfield import epr, serialize
from layerfield.locality import glue, restrict
from layerfield.multilayer import schmidt_layers


def main(outdir: str = "restrictions"):
    out = Path(outdir)
    out.mkdir(exist_ok=True)
    layers = schmidt_layers(epr.singlet())
    lat = layers[0].lattice
    paths = []
    for s in range(lat.site_count):
        p = out / f"site{s:02d}.json"
        serialize.save(p, serialize.restriction_record(restrict(layers, [s])))
        paths.append(p)
    back = glue([serialize.restriction_from(serialize.load(p)) for p in paths])
    exact = all(a.amplitude == b.amplitude and all(np.array_equal(x.values, y.values)
                                                   for x, y in zip(a.factors, b.factors))
                for a, b in zip(layers, back))
    print(f"{len(layers)} layers, {len(paths)} single-site restriction files in {out}/, exact round trip: {exact}")


if __name__ == "__main__":
    main(*sys.argv[1:2])
