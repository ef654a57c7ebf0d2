"""One return-time expansion, drawn before and after.

Towers of heights 1 and 3 with base widths 1 and 2.  Asking for base
measure 2 at height 1 cuts the tall towers and restacks the pieces; total
mass 7 is conserved and the hatched strips carry the moved base measure.
"""
from skyscraper import HeightDistribution, SurgeredPresentation, expand_at
from skyscraper.generators import skyscraper
from skyscraper.render import render_ascii, surgery_diagrams

before = HeightDistribution({1: 1, 3: 2})
model = skyscraper(before).conservative
step, P = expand_at(SurgeredPresentation(model), 1, 2, lambda k: 10)

print("before:", dict(before.explicit), "mass", before.mass())
print("after: ", dict(P.distribution.explicit), "mass", P.distribution.mass())
print(f"cut {len(step.cuts)} tower piece(s), moved base measure {step.added_mass}")
print()
print(render_ascii(surgery_diagrams(before, P.distribution, [step])))
