#pragma once

#include "ultrawalk/measure.hpp"
#include "ultrawalk/tower.hpp"

// Ultrametric structure of the tower induced by a coefficient sequence.
namespace ultrawalk {

// Radius r_k = 1/sigma(k-1) - 1 of an element with min_level k.
double level_radius(const CoefficientSequence& c, int k);
double log_level_radius(const CoefficientSequence& c, int k);
// |x|_sigma.
double sigma_value(const CoefficientSequence& c, const GroupElement& x);
double sigma_distance(const Tower& tower, const CoefficientSequence& c, const GroupElement& x,
                      const GroupElement& y);

struct BallDescriptor {
    GroupElement center;
    int level = 0;
    double radius = 0.0;
    BigInt volume;
};
// Closed ball of radius r: it is the coset x G_k with k the largest level
// whose radius r_k does not exceed r.
BallDescriptor ball(const Tower& tower, const CoefficientSequence& c, const GroupElement& x, double r);
int ball_level(const Tower& tower, const CoefficientSequence& c, double r);
BigInt ball_volume(const Tower& tower, const CoefficientSequence& c, double r);

}  // namespace ultrawalk
