#include "pspin/geometry.hpp"

#include "pspin/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace pspin {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_same_layout(const Configuration& a, const Configuration& b) {
    if (a.layout_ptr() != b.layout_ptr() && !(a.layout() == b.layout()))
        throw std::invalid_argument("configurations have different layouts");
}

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

// Uniform unit vector written into `out`.
void random_direction(std::span<double> out, Rng& rng) {
    std::normal_distribution<double> gauss;
    if (out.size() == 1) {
        out[0] = gauss(rng) < 0.0 ? -1.0 : 1.0;
        return;
    }
    double norm_sq = 0.0;
    while (norm_sq == 0.0) {
        norm_sq = 0.0;
        for (double& x : out) {
            x = gauss(rng);
            norm_sq += x * x;
        }
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (double& x : out) x *= inv;
}

// Density proportional to sin(theta)^k on [a, b], split into panels with a
// constant envelope on each. Supports both the integral and exact sampling.
class SinePowerBand {
public:
    SinePowerBand(double k, double a, double b) : k_(k), a_(a), b_(b) {
        const double width = b - a;
        const auto panels = static_cast<std::size_t>(
            std::clamp(std::ceil(width * std::sqrt(k + 1.0) * 16.0), 16.0, 4096.0));
        const QuadratureRule& rule = rule20();
        const double h = width / static_cast<double>(panels);
        std::vector<double> logs(rule.nodes.size());
        for (std::size_t p = 0; p < panels; ++p) {
            const double lo = a + h * static_cast<double>(p);
            const double hi = p + 1 == panels ? b : lo + h;
            for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
                const double t = 0.5 * (lo + hi) + 0.5 * (hi - lo) * rule.nodes[j];
                logs[j] = std::log(rule.weights[j] * 0.5 * (hi - lo)) + log_density(t);
            }
            panel_lo_.push_back(lo);
            panel_hi_.push_back(hi);
            log_mass_.push_back(log_sum_exp(logs));
            const double peak = (lo <= std::numbers::pi / 2 && std::numbers::pi / 2 <= hi)
                                    ? 1.0
                                    : std::max(std::sin(lo), std::sin(hi));
            log_envelope_.push_back(k_ == 0.0 ? 0.0 : k_ * std::log(peak));
        }
        double top = kNegInf;
        for (std::size_t p = 0; p < panels; ++p)
            top = std::max(top, log_envelope_[p] + std::log(panel_hi_[p] - panel_lo_[p]));
        double acc = 0.0;
        for (std::size_t p = 0; p < panels; ++p) {
            acc += std::exp(log_envelope_[p] + std::log(panel_hi_[p] - panel_lo_[p]) - top);
            cumulative_.push_back(acc);
        }
    }

    double log_integral() const {
        if (k_ == 0.0) return std::log(b_ - a_);
        return log_sum_exp(log_mass_);
    }

    double sample(Rng& rng) const {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        while (true) {
            const double pick = unit(rng) * cumulative_.back();
            const auto p = static_cast<std::size_t>(
                std::upper_bound(cumulative_.begin(), cumulative_.end(), pick) - cumulative_.begin());
            const std::size_t panel = std::min(p, cumulative_.size() - 1);
            const double t = panel_lo_[panel] + unit(rng) * (panel_hi_[panel] - panel_lo_[panel]);
            if (std::log(unit(rng)) <= log_density(t) - log_envelope_[panel]) return t;
        }
    }

private:
    double log_density(double t) const { return k_ == 0.0 ? 0.0 : k_ * std::log(std::sin(t)); }

    static const QuadratureRule& rule20() {
        static const QuadratureRule rule = gauss_legendre(20);
        return rule;
    }

    double k_, a_, b_;
    std::vector<double> panel_lo_, panel_hi_, log_mass_, log_envelope_, cumulative_;
};

struct BandInterval {
    bool empty = false;
    double theta_lo = 0.0; // angle to the centre direction
    double theta_hi = std::numbers::pi;
};

// Angles theta with |sqrt(q) cos(theta) - q| <= delta, q in (0, 1].
BandInterval band_angles(double q, double delta) {
    const double root = std::sqrt(q);
    const double u_lo = (q - delta) / root;
    const double u_hi = (q + delta) / root;
    if (u_lo > 1.0 || u_hi < -1.0) return {true};
    return {false, std::acos(std::min(u_hi, 1.0)), std::acos(std::max(u_lo, -1.0))};
}

} // namespace

Configuration::Configuration(LayoutPtr layout, std::vector<double> coords)
    : layout_(std::move(layout)), coords_(std::move(coords)) {
    if (!layout_) throw std::invalid_argument("configuration: null layout");
    if (coords_.size() != layout_->dimension())
        throw std::invalid_argument("configuration: coordinate count does not match layout dimension");
    refresh_norms();
}

Configuration Configuration::zeros(LayoutPtr layout) {
    const std::size_t n = layout->dimension();
    return Configuration(std::move(layout), std::vector<double>(n, 0.0));
}

std::span<const double> Configuration::block(std::size_t s) const {
    return std::span<const double>(coords_).subspan(layout_->offset(s), layout_->size(s));
}

void Configuration::assign(std::vector<double> coords) {
    if (coords.size() != coords_.size()) throw std::invalid_argument("configuration: dimension change");
    coords_ = std::move(coords);
    refresh_norms();
}

void Configuration::refresh_norms() {
    norms_.assign(layout_->species(), 0.0);
    for (std::size_t s = 0; s < layout_->species(); ++s) {
        const auto b = block(s);
        norms_[s] = dot(b, b);
    }
}

bool Configuration::on_sphere(double rel_tol) const {
    for (std::size_t s = 0; s < layout_->species(); ++s) {
        const double n = static_cast<double>(layout_->size(s));
        if (std::abs(norms_[s] - n) > rel_tol * n) return false;
    }
    return true;
}

bool Configuration::on_shell(const OverlapVector& q, double rel_tol) const {
    if (q.size() != layout_->species()) return false;
    for (std::size_t s = 0; s < layout_->species(); ++s) {
        const double target = static_cast<double>(layout_->size(s)) * q[s];
        const double scale = q[s] > 0.0 ? target : static_cast<double>(layout_->size(s));
        if (std::abs(norms_[s] - target) > rel_tol * scale) return false;
    }
    return true;
}

void BandSpec::validate() const {
    if (!(delta >= 0.0) || !(rho >= 0.0)) throw std::invalid_argument("band: delta and rho must be >= 0");
    if (n < 1) throw std::invalid_argument("band: replica count must be >= 1");
    for (std::size_t s = 0; s < center.layout().species(); ++s)
        if (center.block_norm_sq(s) > static_cast<double>(center.layout().size(s)) * (1.0 + 1e-12))
            throw std::invalid_argument("band: centre outside the closed ball");
}

double overlap_species(const SpeciesLayout& layout, std::size_t s, std::span<const double> a,
                       std::span<const double> b) {
    const std::size_t off = layout.offset(s), n = layout.size(s);
    return dot(a.subspan(off, n), b.subspan(off, n)) / static_cast<double>(n);
}

OverlapVector overlap(const SpeciesLayout& layout, std::span<const double> a, std::span<const double> b) {
    if (a.size() != layout.dimension() || b.size() != layout.dimension())
        throw std::invalid_argument("overlap: dimension mismatch");
    std::vector<double> r(layout.species());
    for (std::size_t s = 0; s < r.size(); ++s) r[s] = overlap_species(layout, s, a, b);
    return OverlapVector(std::move(r));
}

OverlapVector overlap(const Configuration& a, const Configuration& b) {
    require_same_layout(a, b);
    return overlap(a.layout(), a.coords(), b.coords());
}

OverlapVector self_overlap(const Configuration& a) {
    std::vector<double> r(a.layout().species());
    for (std::size_t s = 0; s < r.size(); ++s) r[s] = a.block_norm_sq(s) / static_cast<double>(a.layout().size(s));
    return OverlapVector(std::move(r));
}

Configuration sample_uniform(const LayoutPtr& layout, Rng& rng) {
    return sample_on_shell(layout, OverlapVector::constant(layout->species(), 1.0), rng);
}

Configuration sample_on_shell(const LayoutPtr& layout, const OverlapVector& q, Rng& rng) {
    if (q.size() != layout->species()) throw std::invalid_argument("sample_on_shell: species mismatch");
    std::vector<double> x(layout->dimension(), 0.0);
    for (std::size_t s = 0; s < layout->species(); ++s) {
        if (q[s] < 0.0 || q[s] > 1.0) throw std::invalid_argument("sample_on_shell: q(s) outside [0,1]");
        if (q[s] == 0.0) continue;
        std::span<double> b(x.data() + layout->offset(s), layout->size(s));
        random_direction(b, rng);
        const double radius = std::sqrt(static_cast<double>(layout->size(s)) * q[s]);
        for (double& v : b) v *= radius;
    }
    return Configuration(layout, std::move(x));
}

Configuration sample_in_ball(const LayoutPtr& layout, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> x(layout->dimension(), 0.0);
    for (std::size_t s = 0; s < layout->species(); ++s) {
        const auto n = static_cast<double>(layout->size(s));
        std::span<double> b(x.data() + layout->offset(s), layout->size(s));
        random_direction(b, rng);
        const double radius = std::sqrt(n) * std::pow(unit(rng), 1.0 / n);
        for (double& v : b) v *= radius;
    }
    return Configuration(layout, std::move(x));
}

bool in_band(const Configuration& sigma, const Configuration& m, double delta) {
    require_same_layout(sigma, m);
    const auto& layout = sigma.layout();
    for (std::size_t s = 0; s < layout.species(); ++s) {
        const double r_sm = overlap_species(layout, s, sigma.coords(), m.coords());
        const double r_mm = m.block_norm_sq(s) / static_cast<double>(layout.size(s));
        if (!(std::abs(r_sm - r_mm) <= delta)) return false;
    }
    return true;
}

bool in_multi_band(std::span<const Configuration> replicas, const BandSpec& spec) {
    if (replicas.size() != spec.n) throw std::invalid_argument("in_multi_band: replica count mismatch");
    for (const auto& r : replicas)
        if (!in_band(r, spec.center, spec.delta)) return false;
    const auto q = self_overlap(spec.center);
    const auto& layout = spec.center.layout();
    for (std::size_t i = 0; i < replicas.size(); ++i)
        for (std::size_t j = i + 1; j < replicas.size(); ++j)
            for (std::size_t s = 0; s < layout.species(); ++s)
                if (!(std::abs(overlap_species(layout, s, replicas[i].coords(), replicas[j].coords()) - q[s]) <=
                      spec.rho))
                    return false;
    return true;
}

Configuration tilde_transform(const Configuration& sigma, const Configuration& m, const OverlapVector& q) {
    require_same_layout(sigma, m);
    require_shell_parameter(q, m.layout().species());
    if (!m.on_shell(q, 1e-8)) throw std::invalid_argument("tilde_transform: m is not on S_N(q)");
    if (!sigma.on_sphere(1e-8)) throw std::invalid_argument("tilde_transform: sigma is not on S_N");
    if (!in_band(sigma, m, 1e-8)) throw std::invalid_argument("tilde_transform: sigma is not in B(m,0)");
    const auto& layout = sigma.layout();
    std::vector<double> out(sigma.dimension());
    for (std::size_t s = 0; s < layout.species(); ++s) {
        const double scale = 1.0 / std::sqrt(1.0 - q[s]);
        for (std::size_t i = layout.offset(s); i < layout.offset(s) + layout.size(s); ++i)
            out[i] = scale * (sigma[i] - m[i]);
    }
    return Configuration(sigma.layout_ptr(), std::move(out));
}

Configuration untilde_transform(const Configuration& sigma_tilde, const Configuration& m, const OverlapVector& q) {
    require_same_layout(sigma_tilde, m);
    require_shell_parameter(q, m.layout().species());
    const auto& layout = m.layout();
    std::vector<double> out(m.dimension());
    for (std::size_t s = 0; s < layout.species(); ++s) {
        const double scale = std::sqrt(1.0 - q[s]);
        for (std::size_t i = layout.offset(s); i < layout.offset(s) + layout.size(s); ++i)
            out[i] = m[i] + scale * sigma_tilde[i];
    }
    return Configuration(m.layout_ptr(), std::move(out));
}

Configuration project_phi(const Configuration& sigma, const Configuration& m) {
    require_same_layout(sigma, m);
    const auto& layout = sigma.layout();
    std::vector<double> out(sigma.coords().begin(), sigma.coords().end());
    for (std::size_t s = 0; s < layout.species(); ++s) {
        const double n = static_cast<double>(layout.size(s));
        const double r_mm = m.block_norm_sq(s) / n;
        if (r_mm == 0.0) continue;
        const double r_sm = overlap_species(layout, s, sigma.coords(), m.coords());
        const std::size_t lo = layout.offset(s), hi = lo + layout.size(s);
        double r_tt = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            out[i] = sigma[i] - (r_sm / r_mm) * m[i];
            r_tt += out[i] * out[i];
        }
        r_tt /= n;
        if (!(r_tt > 1e-14 * std::max(1.0, r_mm)))
            throw std::domain_error("project_phi: residual block vanishes for species '" + layout.label(s) + "'");
        const double scale = std::sqrt(std::max(0.0, 1.0 - r_mm) / r_tt);
        for (std::size_t i = lo; i < hi; ++i) out[i] = m[i] + scale * out[i];
    }
    return Configuration(sigma.layout_ptr(), std::move(out));
}

Configuration dilate(const Configuration& m, const OverlapVector& t) {
    const auto& layout = m.layout();
    if (t.size() != layout.species()) throw std::invalid_argument("dilate: species mismatch");
    std::vector<double> out(m.coords().begin(), m.coords().end());
    for (std::size_t s = 0; s < layout.species(); ++s) {
        const double r_mm = m.block_norm_sq(s) / static_cast<double>(layout.size(s));
        if (r_mm == 0.0) continue;
        const double scale = 1.0 + t[s] / r_mm;
        for (std::size_t i = layout.offset(s); i < layout.offset(s) + layout.size(s); ++i) out[i] *= scale;
    }
    return Configuration(m.layout_ptr(), std::move(out));
}

Configuration rescale_to_shell(const Configuration& m_prime, const OverlapVector& q) {
    const auto& layout = m_prime.layout();
    require_shell_parameter(q, layout.species());
    std::vector<double> out(m_prime.coords().begin(), m_prime.coords().end());
    for (std::size_t s = 0; s < layout.species(); ++s) {
        const double r = m_prime.block_norm_sq(s) / static_cast<double>(layout.size(s));
        const std::size_t lo = layout.offset(s), hi = lo + layout.size(s);
        if (q[s] == 0.0) {
            std::fill(out.begin() + static_cast<std::ptrdiff_t>(lo), out.begin() + static_cast<std::ptrdiff_t>(hi), 0.0);
            continue;
        }
        if (r == 0.0) throw std::domain_error("rescale_to_shell: zero block where q(s) > 0");
        const double scale = std::sqrt(q[s] / r);
        for (std::size_t i = lo; i < hi; ++i) out[i] *= scale;
    }
    return Configuration(m_prime.layout_ptr(), std::move(out));
}

double log_band_measure_species(std::size_t n_s, double q, double delta) {
    if (n_s == 0) throw std::invalid_argument("band measure: empty species");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("band measure: q outside [0,1]");
    if (!(delta >= 0.0)) throw std::invalid_argument("band measure: delta must be >= 0");
    if (q == 0.0) return 0.0;
    const double root = std::sqrt(q);
    if (n_s == 1) {
        int hits = 0;
        for (double u : {-1.0, 1.0})
            if (std::abs(root * u - q) <= delta) ++hits;
        return hits == 0 ? kNegInf : std::log(hits / 2.0);
    }
    const BandInterval band = band_angles(q, delta);
    if (band.empty || !(band.theta_hi > band.theta_lo)) return kNegInf;
    const double k = static_cast<double>(n_s) - 2.0;
    return SinePowerBand(k, band.theta_lo, band.theta_hi).log_integral() - log_sine_power_integral(k);
}

double log_band_volume(const SpeciesLayout& layout, const OverlapVector& q, double delta) {
    if (q.size() != layout.species()) throw std::invalid_argument("log_band_volume: species mismatch");
    double total = 0.0;
    for (std::size_t s = 0; s < layout.species(); ++s) total += log_band_measure_species(layout.size(s), q[s], delta);
    return total / static_cast<double>(layout.dimension());
}

Configuration sample_in_band(const Configuration& m, double delta, Rng& rng) {
    const auto& layout = m.layout();
    std::vector<double> x(layout.dimension(), 0.0);
    std::uniform_int_distribution<int> coin(0, 1);
    for (std::size_t s = 0; s < layout.species(); ++s) {
        const std::size_t n_s = layout.size(s), lo = layout.offset(s);
        const double n = static_cast<double>(n_s);
        const double q = m.block_norm_sq(s) / n;
        std::span<double> out(x.data() + lo, n_s);
        if (q > 1.0 + 1e-12) throw std::invalid_argument("sample_in_band: centre outside the closed ball");
        if (q == 0.0) {
            random_direction(out, rng);
            for (double& v : out) v *= std::sqrt(n);
            continue;
        }
        const double root = std::sqrt(std::min(q, 1.0));
        const auto centre = m.block(s);
        if (n_s == 1) {
            std::vector<double> allowed;
            for (double u : {-1.0, 1.0})
                if (std::abs(root * u - q) <= delta) allowed.push_back(u);
            if (allowed.empty()) throw std::domain_error("sample_in_band: empty band");
            const double u = allowed.size() == 1 ? allowed[0] : allowed[static_cast<std::size_t>(coin(rng))];
            out[0] = u * (centre[0] > 0.0 ? 1.0 : -1.0);
            continue;
        }
        const BandInterval band = band_angles(q, delta);
        if (band.empty || band.theta_hi < band.theta_lo) throw std::domain_error("sample_in_band: empty band");
        const double theta = band.theta_hi > band.theta_lo
                                 ? SinePowerBand(n - 2.0, band.theta_lo, band.theta_hi).sample(rng)
                                 : band.theta_lo;
        // Orthogonal direction: Gaussian with the centre component removed.
        const double centre_norm = std::sqrt(m.block_norm_sq(s));
        std::normal_distribution<double> gauss;
        double w_norm_sq = 0.0;
        while (w_norm_sq < 1e-24) {
            for (double& v : out) v = gauss(rng);
            const double c = dot(out, centre) / (centre_norm * centre_norm);
            w_norm_sq = 0.0;
            for (std::size_t i = 0; i < n_s; ++i) {
                out[i] -= c * centre[i];
                w_norm_sq += out[i] * out[i];
            }
        }
        const double w_scale = std::sqrt(n) * std::sin(theta) / std::sqrt(w_norm_sq);
        const double m_scale = std::sqrt(n) * std::cos(theta) / centre_norm;
        for (std::size_t i = 0; i < n_s; ++i) out[i] = m_scale * centre[i] + w_scale * out[i];
    }
    return Configuration(m.layout_ptr(), std::move(x));
}

} // namespace pspin
