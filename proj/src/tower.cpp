#include "ultrawalk/tower.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace ultrawalk {

GroupElement GroupElement::identity(Repr repr) {
    GroupElement e;
    e.repr_ = repr;
    return e;
}

GroupElement GroupElement::digits(std::vector<std::uint64_t> d) {
    GroupElement e;
    e.repr_ = Repr::Digits;
    e.data_ = std::move(d);
    e.canonicalize();
    return e;
}

GroupElement GroupElement::permutation(std::vector<std::uint64_t> images) {
    std::vector<bool> seen(images.size(), false);
    for (auto x : images) {
        if (x >= images.size() || seen[x]) throw DomainError("permutation: images are not a bijection");
        seen[x] = true;
    }
    GroupElement e;
    e.repr_ = Repr::Permutation;
    e.data_ = std::move(images);
    e.canonicalize();
    return e;
}

void GroupElement::canonicalize() {
    if (repr_ == Repr::Digits) {
        while (!data_.empty() && data_.back() == 0) data_.pop_back();
    } else {
        while (!data_.empty() && data_.back() == data_.size() - 1) data_.pop_back();
    }
}

int GroupElement::min_level() const {
    if (data_.empty()) return 0;
    if (repr_ == Repr::Digits) return static_cast<int>(data_.size());
    return static_cast<int>(data_.size()) - 1;
}

std::string GroupElement::to_string() const {
    std::ostringstream out;
    out << (repr_ == Repr::Digits ? "(" : "[");
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (repr_ == Repr::Permutation && i) out << ' ';
        if (repr_ == Repr::Digits && i && std::any_of(data_.begin(), data_.end(), [](auto d) { return d > 9; }))
            out << ' ';
        out << (repr_ == Repr::Permutation ? data_[i] + 1 : data_[i]);
    }
    out << (repr_ == Repr::Digits ? ")" : "]");
    return out.str();
}

Tower Tower::powers_of_two(int level_cap) {
    if (level_cap < 1 || level_cap > kDefaultLevelCap) throw DomainError("level cap must lie in [1, 10000]");
    Tower t;
    t.kind_ = TowerKind::PowersOfTwo;
    t.cap_ = level_cap;
    return t;
}

Tower Tower::factorial(int level_cap) {
    if (level_cap < 1 || level_cap > kDefaultLevelCap) throw DomainError("level cap must lie in [1, 10000]");
    Tower t;
    t.kind_ = TowerKind::Factorial;
    t.cap_ = level_cap;
    return t;
}

Tower Tower::custom(std::vector<BigInt> volumes, bool extend, int level_cap) {
    if (level_cap < 1 || level_cap > kDefaultLevelCap) throw DomainError("level cap must lie in [1, 10000]");
    if (volumes.size() < 2) throw DomainError("custom tower needs v_0 and at least one more level");
    if (volumes[0] != 1) throw DomainError("v_0 = 1 required");
    for (std::size_t k = 1; k < volumes.size(); ++k) {
        if (volumes[k] % volumes[k - 1] != 0) throw DomainError("v_k must divide v_{k+1}");
        if (volumes[k] < 2 * volumes[k - 1]) throw DomainError("subgroup index >= 2 required");
    }
    Tower t;
    t.kind_ = TowerKind::CustomVolumes;
    t.cap_ = level_cap;
    t.extend_ = extend;
    std::vector<double> logs;
    for (auto& v : volumes) logs.push_back(log_of(v));
    t.volumes_ = std::make_shared<const std::vector<BigInt>>(std::move(volumes));
    t.log_volumes_ = std::make_shared<const std::vector<double>>(std::move(logs));
    if (!extend) t.top_ = static_cast<int>(t.volumes_->size()) - 1;
    return t;
}

Tower Tower::truncated(const Tower& base, int top_level) {
    if (top_level < 1) throw DomainError("truncation level K >= 1 required");
    if (top_level > base.max_level()) throw DomainError("truncation level exceeds the base tower");
    const Tower& root = base.kind_ == TowerKind::FiniteTruncated ? *base.base_ : base;
    Tower t;
    t.kind_ = TowerKind::FiniteTruncated;
    t.cap_ = top_level;
    t.top_ = top_level;
    t.base_ = std::make_shared<const Tower>(root);
    return t;
}

TowerKind Tower::base_kind() const { return kind_ == TowerKind::FiniteTruncated ? base_->kind_ : kind_; }

GroupElement::Repr Tower::repr() const {
    return base_kind() == TowerKind::Factorial ? GroupElement::Repr::Permutation : GroupElement::Repr::Digits;
}

void Tower::check_level(int k) const {
    if (k < 0) throw DomainError("level must be >= 0");
    if (k > max_level()) {
        if (top_) throw DomainError("level " + std::to_string(k) + " beyond the top level " + std::to_string(*top_));
        throw RunawayError("level " + std::to_string(k) + " beyond the level cap " + std::to_string(cap_));
    }
}

BigInt Tower::volume(int k) const {
    check_level(k);
    switch (kind_) {
        case TowerKind::PowersOfTwo:
            return BigInt(1) << k;
        case TowerKind::Factorial: {
            BigInt v = 1;
            for (int i = 2; i <= k + 1; ++i) v *= i;
            return v;
        }
        case TowerKind::CustomVolumes: {
            int last = static_cast<int>(volumes_->size()) - 1;
            if (k <= last) return (*volumes_)[k];
            BigInt ratio = (*volumes_)[last] / (*volumes_)[last - 1];
            BigInt v = (*volumes_)[last];
            for (int i = last; i < k; ++i) v *= ratio;
            return v;
        }
        case TowerKind::FiniteTruncated:
            return base_->volume(k);
    }
    return 0;
}

double Tower::log_volume(int k) const {
    check_level(k);
    switch (kind_) {
        case TowerKind::PowersOfTwo:
            return k * 0.6931471805599453;
        case TowerKind::Factorial:
            return std::lgamma(k + 2.0);
        case TowerKind::CustomVolumes: {
            int last = static_cast<int>(volumes_->size()) - 1;
            if (k <= last) return (*log_volumes_)[k];
            double step = (*log_volumes_)[last] - (*log_volumes_)[last - 1];
            return (*log_volumes_)[last] + (k - last) * step;
        }
        case TowerKind::FiniteTruncated:
            return base_->log_volume(k);
    }
    return 0.0;
}

double Tower::inv_volume(int k) const {
    check_level(k);
    switch (kind_) {
        case TowerKind::PowersOfTwo:
            return std::ldexp(1.0, -k);
        case TowerKind::Factorial:
            if (k <= 20) {
                double v = 1.0;
                for (int i = 2; i <= k + 1; ++i) v *= i;
                return 1.0 / v;
            }
            return std::exp(-log_volume(k));
        case TowerKind::CustomVolumes:
            if (k < static_cast<int>(volumes_->size()) && boost::multiprecision::msb((*volumes_)[k]) < 53)
                return 1.0 / (*volumes_)[k].convert_to<double>();
            return std::exp(-log_volume(k));
        case TowerKind::FiniteTruncated:
            return base_->inv_volume(k);
    }
    return 0.0;
}

BigInt Tower::index(int k) const {
    if (k < 1) throw DomainError("index defined for k >= 1");
    check_level(k);
    switch (kind_) {
        case TowerKind::PowersOfTwo:
            return 2;
        case TowerKind::Factorial:
            return k + 1;
        case TowerKind::CustomVolumes: {
            int last = static_cast<int>(volumes_->size()) - 1;
            int j = std::min(k, last);
            return (*volumes_)[j] / (*volumes_)[j - 1];
        }
        case TowerKind::FiniteTruncated:
            return base_->index(k);
    }
    return 0;
}

std::uint64_t Tower::small_index(int k) const {
    BigInt r = index(k);
    if (boost::multiprecision::msb(r) >= 63) throw DomainError("subgroup index too large for element arithmetic");
    return r.convert_to<std::uint64_t>();
}

bool Tower::contains(const GroupElement& a) const {
    if (a.repr() != repr()) return false;
    if (a.min_level() > max_level()) return false;
    if (a.repr() == GroupElement::Repr::Digits) {
        for (std::size_t i = 0; i < a.data().size(); ++i)
            if (a.data()[i] >= small_index(static_cast<int>(i) + 1)) return false;
    }
    return true;
}

void Tower::check_element(const GroupElement& a) const {
    if (!contains(a)) throw DomainError("element " + a.to_string() + " is not in the tower");
}

GroupElement Tower::multiply(const GroupElement& a, const GroupElement& b) const {
    check_element(a);
    check_element(b);
    const auto& x = a.data();
    const auto& y = b.data();
    std::size_t n = std::max(x.size(), y.size());
    std::vector<std::uint64_t> out(n);
    if (repr() == GroupElement::Repr::Digits) {
        for (std::size_t i = 0; i < n; ++i) {
            std::uint64_t r = small_index(static_cast<int>(i) + 1);
            std::uint64_t s = (i < x.size() ? x[i] : 0) + (i < y.size() ? y[i] : 0);
            out[i] = s % r;
        }
        return GroupElement::digits(std::move(out));
    }
    // (a b)(p) = a(b(p))
    for (std::size_t p = 0; p < n; ++p) {
        std::uint64_t bp = p < y.size() ? y[p] : p;
        out[p] = bp < x.size() ? x[bp] : bp;
    }
    return GroupElement::permutation(std::move(out));
}

GroupElement Tower::inverse(const GroupElement& a) const {
    check_element(a);
    const auto& x = a.data();
    std::vector<std::uint64_t> out(x.size());
    if (repr() == GroupElement::Repr::Digits) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            std::uint64_t r = small_index(static_cast<int>(i) + 1);
            out[i] = (r - x[i]) % r;
        }
        return GroupElement::digits(std::move(out));
    }
    for (std::size_t p = 0; p < x.size(); ++p) out[x[p]] = p;
    return GroupElement::permutation(std::move(out));
}

GroupElement Tower::sample_uniform(int k, Rng& rng) const {
    check_level(k);
    if (base_kind() == TowerKind::PowersOfTwo) {
        std::vector<std::uint64_t> bits(k);
        std::uint64_t word = 0;
        for (int i = 0; i < k; ++i) {
            if (i % 64 == 0) word = rng();
            bits[i] = word & 1u;
            word >>= 1;
        }
        return GroupElement::digits(std::move(bits));
    }
    if (base_kind() == TowerKind::Factorial) {
        std::vector<std::uint64_t> perm(k + 1);
        std::iota(perm.begin(), perm.end(), 0);
        for (int i = k; i >= 1; --i) std::swap(perm[i], perm[uniform_below(rng, i + 1)]);
        return GroupElement::permutation(std::move(perm));
    }
    std::vector<std::uint64_t> d(k);
    for (int i = 0; i < k; ++i) d[i] = uniform_below(rng, small_index(i + 1));
    return GroupElement::digits(std::move(d));
}

std::string Tower::describe() const {
    switch (kind_) {
        case TowerKind::PowersOfTwo:
            return "powers_of_two";
        case TowerKind::Factorial:
            return "factorial";
        case TowerKind::CustomVolumes:
            return extend_ ? "custom(extended)" : "custom";
        case TowerKind::FiniteTruncated:
            return "truncated(" + base_->describe() + ", " + std::to_string(*top_) + ")";
    }
    return "";
}

}  // namespace ultrawalk
