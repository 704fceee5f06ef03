#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ultrawalk/core.hpp"

namespace ultrawalk {

enum class TowerKind { PowersOfTwo, Factorial, CustomVolumes, FiniteTruncated };

// Element of the union of the tower. Two concrete realizations:
//  Digits: coordinate i lives in Z(r_{i+1}), r_i = v_i / v_{i-1}; coordinate i
//          first appears in G_{i+1}. Powers of two are the all-radix-2 case.
//  Permutation: images of {0, ..., m-1}; S_{m} sits at level m-1.
// Canonical form drops trailing zero digits / trailing fixed points, so
// equality is vector equality and min_level is read off the length.
class GroupElement {
public:
    enum class Repr { Digits, Permutation };

    GroupElement() = default;
    static GroupElement identity(Repr repr);
    static GroupElement digits(std::vector<std::uint64_t> d);
    static GroupElement permutation(std::vector<std::uint64_t> images);

    Repr repr() const { return repr_; }
    const std::vector<std::uint64_t>& data() const { return data_; }
    int min_level() const;
    bool is_identity() const { return data_.empty(); }
    std::string to_string() const;

    friend bool operator==(const GroupElement& a, const GroupElement& b) {
        return a.repr_ == b.repr_ && a.data_ == b.data_;
    }

private:
    void canonicalize();
    Repr repr_ = Repr::Digits;
    std::vector<std::uint64_t> data_;
};

// Strictly increasing chain {e} = G_0 < G_1 < ... with exact volumes v_k.
// Immutable after construction; all members are safe for concurrent reads.
class Tower {
public:
    static Tower powers_of_two(int level_cap = kDefaultLevelCap);
    // G_k = S_{k+1}: v_k = (k+1)!.
    static Tower factorial(int level_cap = kDefaultLevelCap);
    // volumes[0] must be 1, each volume divides the next with index >= 2.
    // With extend, levels past the list repeat the last index.
    static Tower custom(std::vector<BigInt> volumes, bool extend, int level_cap = kDefaultLevelCap);
    // G = G_K of the base tower.
    static Tower truncated(const Tower& base, int top_level);

    TowerKind kind() const { return kind_; }
    // The untruncated tower underneath (itself unless truncated).
    TowerKind base_kind() const;
    GroupElement::Repr repr() const;
    int level_cap() const { return cap_; }
    // Top level for finite towers.
    std::optional<int> top_level() const { return top_; }
    // Largest addressable level.
    int max_level() const { return top_ ? *top_ : cap_; }
    bool finite() const { return top_.has_value(); }

    BigInt volume(int k) const;
    double log_volume(int k) const;
    // 1 / v_k in double, 0 once it underflows.
    double inv_volume(int k) const;
    // Index [G_k : G_{k-1}] for k >= 1.
    BigInt index(int k) const;
    // Index as a machine word; throws if it does not fit.
    std::uint64_t small_index(int k) const;

    GroupElement identity() const { return GroupElement::identity(repr()); }
    GroupElement multiply(const GroupElement& a, const GroupElement& b) const;
    GroupElement inverse(const GroupElement& a) const;
    bool contains(const GroupElement& a) const;
    GroupElement sample_uniform(int k, Rng& rng) const;

    std::string describe() const;

private:
    void check_level(int k) const;
    void check_element(const GroupElement& a) const;

    TowerKind kind_ = TowerKind::PowersOfTwo;
    int cap_ = kDefaultLevelCap;
    std::optional<int> top_;
    // CustomVolumes data, and the base for FiniteTruncated.
    std::shared_ptr<const std::vector<BigInt>> volumes_;
    std::shared_ptr<const std::vector<double>> log_volumes_;
    bool extend_ = false;
    std::shared_ptr<const Tower> base_;
};

}  // namespace ultrawalk
