#include "mfbdsvie/random_variable.hpp"

#include "mfbdsvie/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mfbdsvie {

namespace {

constexpr std::uint64_t mask(int bits) noexcept {
    return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
}

int known_w_bits(const LatticeSpec& l, SigmaField f) noexcept { return f.w_upto * l.width; }
int known_b_bits(const LatticeSpec& l, SigmaField f) noexcept { return (l.n_steps - f.b_from) * l.width; }

void require_same_lattice(const LatticeSpec& a, const LatticeSpec& b) {
    if (!(a == b)) throw Error(ErrorKind::LatticeMismatch, "random variables live on different lattices");
}

// Maps a slot of a table on `from` to the slot of a table on `to`, where the
// increments known to `to` are a subset of those known to `from`.
struct SlotProjector {
    std::uint64_t w_mask_to;
    int w_bits_from;
    int w_bits_to;
    int b_shift;

    SlotProjector(const LatticeSpec& l, SigmaField from, SigmaField to)
        : w_mask_to(mask(known_w_bits(l, to))),
          w_bits_from(known_w_bits(l, from)),
          w_bits_to(known_w_bits(l, to)),
          b_shift((to.b_from - from.b_from) * l.width) {}

    std::size_t operator()(std::size_t slot) const noexcept {
        const std::uint64_t s = slot;
        const std::uint64_t w = s & w_mask_to;
        const std::uint64_t b = (s >> w_bits_from) >> b_shift;
        return static_cast<std::size_t>(w | (b << w_bits_to));
    }
};

} // namespace

void check_field(const LatticeSpec& lattice, SigmaField field) {
    if (field.w_upto < 0 || field.w_upto > lattice.n_steps || field.b_from < 0 || field.b_from > lattice.n_steps)
        throw Error(ErrorKind::IndexOutOfRange,
                    "sigma-field (" + std::to_string(field.w_upto) + ", " + std::to_string(field.b_from) +
                        ") outside lattice with N = " + std::to_string(lattice.n_steps));
}

std::size_t table_size(const LatticeSpec& lattice, SigmaField field) {
    check_field(lattice, field);
    return std::size_t{1} << (known_w_bits(lattice, field) + known_b_bits(lattice, field));
}

RandomVariable::RandomVariable(const LatticeSpec& lattice, SigmaField field, std::vector<double> values)
    : lattice_(lattice), field_(field), values_(std::move(values)) {
    if (values_.size() != table_size(lattice, field))
        throw Error(ErrorKind::LatticeMismatch, "value table length does not match the sigma-field shape");
}

RandomVariable RandomVariable::constant(const LatticeSpec& lattice, double value) {
    return RandomVariable(lattice, SigmaField{0, lattice.n_steps}, {value});
}

RandomVariable RandomVariable::constant(const LatticeSpec& lattice, SigmaField field, double value) {
    return RandomVariable(lattice, field, std::vector<double>(table_size(lattice, field), value));
}

RandomVariable RandomVariable::tabulate(const LatticeSpec& lattice, SigmaField field,
                                        const std::function<double(PathIndex)>& fn) {
    RandomVariable out(lattice, field, std::vector<double>(table_size(lattice, field)));
    for (std::size_t s = 0; s < out.values_.size(); ++s) out.values_[s] = fn(out.path_of(s));
    return out;
}

std::size_t RandomVariable::index_of(PathIndex path) const noexcept {
    const int kw = known_w_bits(lattice_, field_);
    const int kb = known_b_bits(lattice_, field_);
    const std::uint64_t w = path.w_bits & mask(kw);
    const std::uint64_t b = (path.b_bits >> (field_.b_from * lattice_.width)) & mask(kb);
    return static_cast<std::size_t>(w | (b << kw));
}

PathIndex RandomVariable::path_of(std::size_t slot) const noexcept {
    const int kw = known_w_bits(lattice_, field_);
    const std::uint64_t s = slot;
    return {s & mask(kw), (s >> kw) << (field_.b_from * lattice_.width)};
}

double RandomVariable::at(PathIndex path) const { return values_[index_of(path)]; }

RandomVariable& RandomVariable::operator+=(const RandomVariable& other) {
    accumulate(*this, other, 1.0);
    return *this;
}

RandomVariable& RandomVariable::operator*=(double factor) noexcept {
    for (double& v : values_) v *= factor;
    return *this;
}

RandomVariable lift(const RandomVariable& x, SigmaField finer) {
    const LatticeSpec& l = x.lattice();
    if (!refines(finer, x.field()))
        throw Error(ErrorKind::MeasurabilityViolation, "lift target does not refine the source field");
    if (finer == x.field()) return x;
    const SlotProjector to_source(l, finer, x.field());
    std::vector<double> out(table_size(l, finer));
    const auto src = x.values();
    for (std::size_t s = 0; s < out.size(); ++s) out[s] = src[to_source(s)];
    return RandomVariable(l, finer, std::move(out));
}

RandomVariable condexp(const RandomVariable& x, SigmaField field) {
    const LatticeSpec& l = x.lattice();
    check_field(l, field);
    const SigmaField common = meet(x.field(), field);
    if (common == x.field()) return lift(x, field);
    const SlotProjector to_common(l, x.field(), common);
    std::vector<double> acc(table_size(l, common), 0.0);
    const auto src = x.values();
    for (std::size_t s = 0; s < src.size(); ++s) acc[to_common(s)] += src[s];
    const double scale = static_cast<double>(acc.size()) / static_cast<double>(src.size());
    for (double& v : acc) v *= scale;
    return lift(RandomVariable(l, common, std::move(acc)), field);
}

double expectation(const RandomVariable& x) {
    double sum = 0.0;
    for (double v : x.values()) sum += v;
    return sum / static_cast<double>(x.size());
}

bool is_measurable(const RandomVariable& x, SigmaField field, double tol) {
    if (refines(field, x.field())) return true;
    const RandomVariable projected = lift(condexp(x, meet(x.field(), field)), x.field());
    return max_abs_diff(projected, x) <= tol * std::max(1.0, max_abs(x));
}

RandomVariable restrict_to(const RandomVariable& x, SigmaField field, double tol) {
    check_field(x.lattice(), field);
    if (refines(field, x.field())) return lift(x, field);
    if (!is_measurable(x, field, tol))
        throw Error(ErrorKind::MeasurabilityViolation,
                    "value depends on increments unknown to field (" + std::to_string(field.w_upto) + ", " +
                        std::to_string(field.b_from) + ")");
    return condexp(x, field);
}

RandomVariable combine(const RandomVariable& a, const RandomVariable& b,
                       const std::function<double(double, double)>& op) {
    require_same_lattice(a.lattice(), b.lattice());
    const SigmaField f = join(a.field(), b.field());
    RandomVariable la = lift(a, f);
    const RandomVariable lb = lift(b, f);
    auto out = la.values();
    const auto rhs = lb.values();
    for (std::size_t s = 0; s < out.size(); ++s) out[s] = op(out[s], rhs[s]);
    return la;
}

RandomVariable map_values(const RandomVariable& x, const std::function<double(double)>& op) {
    RandomVariable out = x;
    for (double& v : out.values()) v = op(v);
    return out;
}

RandomVariable operator+(const RandomVariable& a, const RandomVariable& b) {
    return combine(a, b, [](double u, double v) { return u + v; });
}
RandomVariable operator-(const RandomVariable& a, const RandomVariable& b) {
    return combine(a, b, [](double u, double v) { return u - v; });
}
RandomVariable operator*(const RandomVariable& a, const RandomVariable& b) {
    return combine(a, b, [](double u, double v) { return u * v; });
}
RandomVariable operator*(double s, const RandomVariable& x) {
    RandomVariable out = x;
    out *= s;
    return out;
}
RandomVariable operator+(const RandomVariable& x, double s) {
    RandomVariable out = x;
    for (double& v : out.values()) v += s;
    return out;
}

void accumulate(RandomVariable& acc, const RandomVariable& x, double scale) {
    require_same_lattice(acc.lattice(), x.lattice());
    if (!refines(acc.field(), x.field())) {
        acc = lift(acc, join(acc.field(), x.field()));
    }
    const SlotProjector to_source(acc.lattice(), acc.field(), x.field());
    auto out = acc.values();
    const auto src = x.values();
    for (std::size_t s = 0; s < out.size(); ++s) out[s] += scale * src[to_source(s)];
}

double max_abs(const RandomVariable& x) noexcept {
    double m = 0.0;
    for (double v : x.values()) m = std::max(m, std::abs(v));
    return m;
}

double max_abs_diff(const RandomVariable& a, const RandomVariable& b) {
    require_same_lattice(a.lattice(), b.lattice());
    const SigmaField f = join(a.field(), b.field());
    const RandomVariable la = lift(a, f);
    const RandomVariable lb = lift(b, f);
    double m = 0.0;
    const auto u = la.values();
    const auto v = lb.values();
    for (std::size_t s = 0; s < u.size(); ++s) m = std::max(m, std::abs(u[s] - v[s]));
    return m;
}

// --- lattice primitives ------------------------------------------------------

namespace {

void check_step(const LatticeSpec& l, int j, int particle) {
    if (j < 0 || j >= l.n_steps)
        throw Error(ErrorKind::IndexOutOfRange, "step index " + std::to_string(j) + " outside [0, N)");
    if (particle < 0 || particle >= l.width)
        throw Error(ErrorKind::IndexOutOfRange, "particle index " + std::to_string(particle) + " out of range");
}

void check_range(const LatticeSpec& l, std::size_t count, int j_lo, int j_hi) {
    if (j_lo < 0 || j_hi > l.n_steps || j_lo > j_hi || count != static_cast<std::size_t>(j_hi - j_lo))
        throw Error(ErrorKind::IndexOutOfRange, "integration range does not match the integrand sequence");
}

} // namespace

RandomVariable w_increment(const LatticeSpec& lattice, int j, int particle) {
    check_step(lattice, j, particle);
    const std::uint64_t bit = std::uint64_t{1} << (j * lattice.width + particle);
    const double inc = lattice.inc;
    return RandomVariable::tabulate(lattice, SigmaField{j + 1, lattice.n_steps},
                                    [=](PathIndex p) { return (p.w_bits & bit) ? inc : -inc; });
}

RandomVariable b_increment(const LatticeSpec& lattice, int j, int particle) {
    check_step(lattice, j, particle);
    const std::uint64_t bit = std::uint64_t{1} << (j * lattice.width + particle);
    const double inc = lattice.inc;
    return RandomVariable::tabulate(lattice, SigmaField{0, j},
                                    [=](PathIndex p) { return (p.b_bits & bit) ? inc : -inc; });
}

RandomVariable w_walk(const LatticeSpec& lattice, int i, int particle) {
    if (i < 0 || i > lattice.n_steps) throw Error(ErrorKind::IndexOutOfRange, "grid index out of range");
    RandomVariable out = RandomVariable::constant(lattice, SigmaField{i, lattice.n_steps}, 0.0);
    for (int j = 0; j < i; ++j) accumulate(out, w_increment(lattice, j, particle));
    return out;
}

RandomVariable b_sum(const LatticeSpec& lattice, int from, int to, int particle) {
    if (from < 0 || to > lattice.n_steps || from > to)
        throw Error(ErrorKind::IndexOutOfRange, "grid index out of range");
    RandomVariable out = RandomVariable::constant(lattice, SigmaField{0, from}, 0.0);
    for (int j = from; j < to; ++j) accumulate(out, b_increment(lattice, j, particle));
    return out;
}

RandomVariable forward_integral(const LatticeSpec& lattice, std::span<const RandomVariable> z, int j_lo,
                                int j_hi, int particle) {
    check_range(lattice, z.size(), j_lo, j_hi);
    RandomVariable out = RandomVariable::constant(lattice, 0.0);
    for (int j = j_lo; j < j_hi; ++j) {
        const RandomVariable& zj = z[static_cast<std::size_t>(j - j_lo)];
        if (!(zj.lattice() == lattice)) throw Error(ErrorKind::LatticeMismatch, "integrand on another lattice");
        out += restrict_to(zj, SigmaField::at(j)) * w_increment(lattice, j, particle);
    }
    return out;
}

RandomVariable backward_integral(const LatticeSpec& lattice, std::span<const RandomVariable> g, int j_lo,
                                 int j_hi, int particle) {
    check_range(lattice, g.size(), j_lo, j_hi);
    RandomVariable out = RandomVariable::constant(lattice, 0.0);
    for (int j = j_lo; j < j_hi; ++j) {
        const RandomVariable& gj = g[static_cast<std::size_t>(j - j_lo)];
        if (!(gj.lattice() == lattice)) throw Error(ErrorKind::LatticeMismatch, "integrand on another lattice");
        out += restrict_to(gj, SigmaField::at(j + 1)) * b_increment(lattice, j, particle);
    }
    return out;
}

RandomVariable flip_derivative(const RandomVariable& x, int j, int particle) {
    const LatticeSpec& l = x.lattice();
    check_step(l, j, particle);
    RandomVariable out = x;
    const int bit_pos = j * l.width + particle;
    if (bit_pos >= known_w_bits(l, x.field())) {
        for (double& v : out.values()) v = 0.0;
        return out;
    }
    const std::size_t bit = std::size_t{1} << bit_pos;
    const auto src = x.values();
    auto dst = out.values();
    const double denom = 2.0 * l.inc;
    for (std::size_t s = 0; s < src.size(); ++s) {
        if ((s & bit) == 0) continue;
        const double d = (src[s] - src[s ^ bit]) / denom;
        dst[s] = d;
        dst[s ^ bit] = d;
    }
    return out;
}

} // namespace mfbdsvie
