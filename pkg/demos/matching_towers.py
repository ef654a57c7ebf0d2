"""Two different skyscrapers given the same return-time masses below height 8.

Both bases are shrunk and expanded until every height up to 8 carries the
same base measure on both sides; the matched mass stays below epsilon.
"""
from fractions import Fraction

from skyscraper import GeometricTail, HeightDistribution, match_distributions
from skyscraper.generators import geometric_skyscraper, skyscraper

T1 = geometric_skyscraper()
T2 = skyscraper(HeightDistribution({1: Fraction(1, 4)}, GeometricTail(2, 3, Fraction(1, 2), Fraction(1, 3))))
eps = Fraction(1, 4)
P1, P2, targets = match_distributions(T1, T2, eps, 8)

print(f"{'height':>6}  {'side 1':>16}  {'side 2':>16}")
for h in range(1, 9):
    print(f"{h:>6}  {str(P1.distribution.width(h)):>16}  {str(P2.distribution.width(h)):>16}")
print("limit base measure", P1.limit_base_measure(), "<", eps)
