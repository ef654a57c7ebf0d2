"""Classification, a certified conjugacy and its sampled check.

Two infinite skyscrapers (no dissipative part) are approximately conjugate;
the certificate bounds the measure of the tower tops, which is exactly where
the relation is allowed to fail.  A shift by 1 and a shift by 3/2 are not.
"""
from fractions import Fraction

from skyscraper import GeometricTail, HeightDistribution, classify, lambda_approx_conjugacy, mu_approx_conjugacy
from skyscraper.generators import geometric_skyscraper, shift, skyscraper

T1 = geometric_skyscraper()
T2 = skyscraper(HeightDistribution({1: Fraction(1, 4)}, GeometricTail(2, 3, Fraction(1, 2), Fraction(1, 3))))

print(classify(T1, T2))
print(classify(shift(1), shift("3/2")))

m = lambda_approx_conjugacy(T1, T2, Fraction(1, 4))
print("lambda certificate:", m.certificate.bound)
report = m.verify(2000)
print("sampled:", report)

mu = mu_approx_conjugacy(shift(1), T1, Fraction(1, 4))
print("mu certificate:", float(mu.certificate.bound), "exact value", mu.certificate.bound)
