#include "ultrawalk/metric.hpp"

#include <cmath>

namespace ultrawalk {

double log_level_radius(const CoefficientSequence& c, int k) {
    if (k < 0) throw DomainError("level must be >= 0");
    if (k == 0) return kNegInf;
    return c.log_partial_sum(k - 1) - c.log_tail(k - 1);
}

double level_radius(const CoefficientSequence& c, int k) {
    if (k < 0) throw DomainError("level must be >= 0");
    if (k == 0) return 0.0;
    double s = c.tail(k - 1);
    if (s == 0.0) return std::exp(log_level_radius(c, k));
    // 1/sigma - 1 = S/sigma
    return c.partial_sum(k - 1) / s;
}

double sigma_value(const CoefficientSequence& c, const GroupElement& x) { return level_radius(c, x.min_level()); }

double sigma_distance(const Tower& tower, const CoefficientSequence& c, const GroupElement& x,
                      const GroupElement& y) {
    return sigma_value(c, tower.multiply(tower.inverse(x), y));
}

int ball_level(const Tower& tower, const CoefficientSequence& c, double r) {
    if (!(r >= 0.0)) throw DomainError("r >= 0 required");
    int top = tower.max_level();
    auto fits = [&](int k) { return level_radius(c, k) <= r; };
    // Radii increase with the level: gallop, then bisect.
    int lo = 0, hi = 1;
    while (hi <= top && fits(hi)) {
        lo = hi;
        hi = hi * 2;
    }
    if (hi > top) {
        if (fits(top)) {
            if (!tower.finite()) throw RunawayError("ball radius beyond the level cap");
            return top;
        }
        hi = top;
    }
    while (hi - lo > 1) {
        int mid = lo + (hi - lo) / 2;
        if (fits(mid))
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

BallDescriptor ball(const Tower& tower, const CoefficientSequence& c, const GroupElement& x, double r) {
    if (!tower.contains(x)) throw DomainError("element is not in the tower");
    BallDescriptor b;
    b.center = x;
    b.level = ball_level(tower, c, r);
    b.radius = r;
    b.volume = tower.volume(b.level);
    return b;
}

BigInt ball_volume(const Tower& tower, const CoefficientSequence& c, double r) {
    return tower.volume(ball_level(tower, c, r));
}

}  // namespace ultrawalk
