#include "hartogskit/series.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include <Eigen/SVD>

#include "hartogskit/error.hpp"
#include "hartogskit/io.hpp"

namespace hk {

namespace {

VectorXc eval_terms(const HomogeneousMap::Terms& terms, int output_dim, const VectorXc& x)
{
    VectorXc out = VectorXc::Zero(output_dim);
    for (const auto& [e, coeff] : terms) {
        Complex mono(1.0, 0.0);
        for (std::size_t j = 0; j < e.size(); ++j)
            for (int p = 0; p < e[j]; ++p)
                mono *= x[static_cast<Eigen::Index>(j)];
        out += coeff * mono;
    }
    return out;
}

MatrixXc linear_matrix(const HomogeneousMap::Terms& terms, int input_dim, int output_dim)
{
    MatrixXc a = MatrixXc::Zero(output_dim, input_dim);
    for (const auto& [e, coeff] : terms)
        for (int j = 0; j < input_dim; ++j)
            if (e[j] == 1)
                a.col(j) += coeff;
    return a;
}

double radical_inverse(int base, unsigned index)
{
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * (index % base);
        index /= base;
    }
    return r;
}

int nth_prime(int n)
{
    static const int primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53,
                                 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131};
    if (n < 32)
        return primes[n];
    int candidate = primes[31] + 2;
    for (int found = 31;; candidate += 2) {
        bool is_prime = true;
        for (int d = 3; d * d <= candidate; d += 2)
            if (candidate % d == 0) {
                is_prime = false;
                break;
            }
        if (is_prime && ++found == n)
            return candidate;
    }
}

/// Halton point mapped to the unit sphere of C^d through Box-Muller.
VectorXc sphere_point(int d, unsigned index)
{
    VectorXc x(d);
    for (int j = 0; j < d; ++j) {
        // Offset by one so the first point avoids u = 0.
        const double u1 = std::max(radical_inverse(nth_prime(2 * j), index + 1), 1e-300);
        const double u2 = radical_inverse(nth_prime(2 * j + 1), index + 1);
        const double rad = std::sqrt(-2.0 * std::log(u1));
        x[j] = Complex(rad * std::cos(2 * kPi * u2), rad * std::sin(2 * kPi * u2));
    }
    const double n = x.norm();
    if (n == 0.0) {
        x.setZero();
        x[0] = 1.0;
        return x;
    }
    return x / n;
}

double ascend(const HomogeneousMap& p, VectorXc x)
{
    const int d = p.input_dim();
    auto value = [&](const VectorXc& v) { return p(v).squaredNorm(); };
    double fx = value(x);
    double step = 0.5;
    const double h = 1e-6;
    for (int iter = 0; iter < 300 && step > 1e-14; ++iter) {
        const VectorXc px = p(x);
        MatrixXc jac(px.size(), d);
        for (int j = 0; j < d; ++j) {
            VectorXc xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            jac.col(j) = (p(xp) - p(xm)) / (2 * h);
        }
        VectorXc g = jac.adjoint() * px;
        // Tangential component only: radial moves just rescale.
        g -= x * x.dot(g);
        if (g.norm() < 1e-15 * std::max(1.0, fx))
            break;
        bool improved = false;
        while (step > 1e-14) {
            VectorXc y = x + step * g / g.norm();
            y /= y.norm();
            const double fy = value(y);
            if (fy > fx) {
                x = y;
                fx = fy;
                step *= 1.5;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved)
            break;
    }
    return std::sqrt(fx);
}

} // namespace

HomogeneousMap HomogeneousMap::from_terms(int degree, int input_dim, int output_dim, Terms terms,
                                          std::optional<double> norm)
{
    if (degree < 0 || input_dim < 1 || output_dim < 1)
        fail(ErrorCode::InvalidArgument, "homogeneous map needs degree >= 0 and positive dimensions");
    for (const auto& [e, coeff] : terms) {
        if (static_cast<int>(e.size()) != input_dim || exponent_degree(e) != degree)
            fail(ErrorCode::InvalidArgument, "homogeneous map term has the wrong exponent shape");
        if (coeff.size() != output_dim)
            fail(ErrorCode::InvalidArgument, "homogeneous map term has the wrong output length");
        if (!all_finite(coeff))
            fail(ErrorCode::NonFinite, "homogeneous map coefficient is not finite");
    }
    HomogeneousMap m;
    m.degree_ = degree;
    m.input_dim_ = input_dim;
    m.output_dim_ = output_dim;
    m.terms_ = std::move(terms);
    if (degree > kMaxDenseDegree || input_dim > kMaxDenseInputs) {
        auto stored = std::make_shared<Terms>(std::move(m.terms_));
        m.terms_.clear();
        m.callable_ = [stored, output_dim](const VectorXc& x) { return eval_terms(*stored, output_dim, x); };
    }
    m.norm_ = norm ? *norm : homogeneous_norm(m, 256);
    return m;
}

HomogeneousMap HomogeneousMap::from_callable(int degree, int input_dim, int output_dim, HoloMap f,
                                             std::optional<double> norm)
{
    if (!f)
        fail(ErrorCode::InvalidArgument, "homogeneous map callable is empty");
    HomogeneousMap m;
    m.degree_ = degree;
    m.input_dim_ = input_dim;
    m.output_dim_ = output_dim;
    m.callable_ = std::move(f);
    m.norm_ = norm ? *norm : homogeneous_norm(m, 256);
    return m;
}

HomogeneousMap HomogeneousMap::constant(const VectorXc& value, int input_dim)
{
    Terms t;
    if (value.norm() > 0)
        t.emplace_back(Exponent(input_dim, 0), value);
    return from_terms(0, input_dim, static_cast<int>(value.size()), std::move(t), value.norm());
}

HomogeneousMap HomogeneousMap::linear(const MatrixXc& a)
{
    Terms t;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        if (a.col(j).norm() == 0)
            continue;
        Exponent e(a.cols(), 0);
        e[j] = 1;
        t.emplace_back(e, a.col(j));
    }
    const double n = a.size() == 0 ? 0.0 : Eigen::JacobiSVD<MatrixXc>(a).singularValues()(0);
    return from_terms(1, static_cast<int>(a.cols()), static_cast<int>(a.rows()), std::move(t), n);
}

VectorXc HomogeneousMap::operator()(const VectorXc& x) const
{
    if (x.size() != input_dim_)
        fail(ErrorCode::InvalidArgument, "homogeneous map evaluated at a point of the wrong dimension");
    return callable_ ? callable_(x) : eval_terms(terms_, output_dim_, x);
}

HomogeneousMap HomogeneousMap::dilated(Complex c) const
{
    const Complex factor = std::pow(c, degree_);
    HomogeneousMap m = *this;
    m.norm_ = norm_ * std::abs(factor);
    if (callable_) {
        auto f = callable_;
        m.callable_ = [f, factor](const VectorXc& x) -> VectorXc { return f(x) * factor; };
    } else {
        for (auto& term : m.terms_)
            term.second *= factor;
    }
    return m;
}

double homogeneous_norm(const HomogeneousMap& p, int sample_count)
{
    if (sample_count < 1)
        fail(ErrorCode::InvalidArgument, "homogeneous_norm needs at least one sample");
    const int d = p.input_dim();
    if (p.degree() == 0)
        return p(VectorXc::Zero(d)).norm();
    if (p.is_dense() && p.terms().empty())
        return 0.0;
    if (p.degree() == 1 && p.is_dense()) {
        const MatrixXc a = linear_matrix(p.terms(), d, p.output_dim());
        return Eigen::JacobiSVD<MatrixXc>(a).singularValues()(0);
    }

    std::vector<std::pair<double, unsigned>> scored;
    scored.reserve(sample_count + d);
    for (int i = 0; i < sample_count; ++i)
        scored.emplace_back(p(sphere_point(d, static_cast<unsigned>(i))).norm(), static_cast<unsigned>(i));
    double best = 0.0;
    for (const auto& s : scored)
        best = std::max(best, s.first);
    // Coordinate axes are cheap and catch maps concentrated on a single variable.
    for (int j = 0; j < d; ++j) {
        VectorXc e = VectorXc::Zero(d);
        e[j] = 1.0;
        best = std::max(best, p(e).norm());
    }
    if (best == 0.0)
        return 0.0;
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    const std::size_t starts = std::min<std::size_t>(4, scored.size());
    for (std::size_t s = 0; s < starts; ++s)
        best = std::max(best, ascend(p, sphere_point(d, scored[s].second)));
    return best;
}

PowerSeriesMap::PowerSeriesMap(TruncatedVector<> center, std::vector<HomogeneousMap> terms, SeriesKind kind,
                               std::optional<double> radius)
    : center_(std::move(center)), terms_(std::move(terms)), kind_(kind)
{
    if (terms_.empty())
        fail(ErrorCode::InvalidArgument, "power series needs at least the constant term");
    for (std::size_t n = 0; n < terms_.size(); ++n) {
        if (terms_[n].degree() != static_cast<int>(n))
            fail(ErrorCode::InvalidArgument, "power series term " + std::to_string(n) + " has the wrong degree");
        if (terms_[n].input_dim() != terms_[0].input_dim() || terms_[n].output_dim() != terms_[0].output_dim())
            fail(ErrorCode::InvalidArgument, "power series terms have mismatched dimensions");
    }
    if (center_.size() > terms_[0].input_dim())
        fail(ErrorCode::InvalidArgument, "power series center is longer than the input dimension");
    center_ = center_.padded(terms_[0].input_dim());
    if (radius) {
        if (!(*radius > 0))
            fail(ErrorCode::InvalidArgument, "radius estimate must be positive");
        radius_ = *radius;
    } else {
        radius_ = estimate_radius(*this);
    }
}

TruncatedVector<> eval_series(const PowerSeriesMap& s, const TruncatedVector<>& x)
{
    const TruncatedVector<> dx = x.padded(s.input_dim()) - s.center();
    if (dx.size() != s.input_dim())
        fail(ErrorCode::InvalidArgument, "evaluation point is longer than the series input dimension");
    const double rho = dx.norm();
    const double radius = s.radius_estimate();
    if (!(rho < radius))
        fail(ErrorCode::OutOfRadius,
             "point at distance " + format_double(rho) + " outside radius " + format_double(radius));

    VectorXc sum = VectorXc::Zero(s.output_dim());
    double magnitude = 0.0;
    for (const auto& term : s.terms()) {
        const VectorXc v = term(dx.coords);
        if (!all_finite(v))
            fail(ErrorCode::NonFinite, "degree " + std::to_string(term.degree()) + " term overflowed");
        sum += v;
        magnitude += v.norm();
    }
    if (!all_finite(sum))
        fail(ErrorCode::NonFinite, "series sum overflowed");

    // Rounding in the partial sum, plus the geometric remainder for truncated series.
    double tail = 8 * std::numeric_limits<double>::epsilon() * magnitude * s.terms().size();
    if (s.kind() == SeriesKind::Truncated && std::isfinite(radius)) {
        const double q = rho / radius;
        double k = 0.0;
        for (const auto& term : s.terms())
            k = std::max(k, term.norm_estimate() * std::pow(radius, term.degree()));
        tail += k * std::pow(q, s.degree() + 1) / (1.0 - q);
    }
    return TruncatedVector<>(std::move(sum), tail);
}

double estimate_radius(const PowerSeriesMap& s)
{
    if (s.kind() == SeriesKind::Polynomial)
        return kInf;
    std::vector<std::pair<double, double>> points;
    for (const auto& term : s.terms()) {
        const double nrm = term.norm_estimate();
        if (nrm > 0 && std::isfinite(nrm))
            points.emplace_back(term.degree(), std::log(nrm));
    }
    if (points.size() < 4)
        fail(ErrorCode::InsufficientTerms,
             "radius estimate needs 4 nonzero terms, have " + std::to_string(points.size()));
    const std::size_t from = points.size() / 2;
    double mx = 0, my = 0;
    const double count = static_cast<double>(points.size() - from);
    for (std::size_t i = from; i < points.size(); ++i) {
        mx += points[i].first;
        my += points[i].second;
    }
    mx /= count;
    my /= count;
    double sxx = 0, sxy = 0;
    for (std::size_t i = from; i < points.size(); ++i) {
        sxx += (points[i].first - mx) * (points[i].first - mx);
        sxy += (points[i].first - mx) * (points[i].second - my);
    }
    const double slope = sxy / sxx;
    return std::exp(-slope);
}

ComplexSeriesMap to_series_map(const PowerSeriesMap& s)
{
    ComplexSeriesMap m = ComplexSeriesMap::zeros(s.input_dim(), s.output_dim(), s.degree(), Complex(0));
    const auto& basis = m.components.front().basis();
    for (const auto& term : s.terms()) {
        if (!term.is_dense())
            fail(ErrorCode::InvalidArgument, "callable-only term cannot be expanded into coefficients");
        for (const auto& [e, coeff] : term.terms()) {
            const int idx = basis.index(e);
            for (int c = 0; c < s.output_dim(); ++c)
                if (coeff[c] != Complex(0))
                    m.components[c].add(idx, coeff[c]);
        }
    }
    return m;
}

PowerSeriesMap to_power_series(const ComplexSeriesMap& f, const TruncatedVector<>& center, SeriesKind kind,
                               std::optional<double> radius)
{
    const auto& basis = f.components.front().basis();
    std::vector<HomogeneousMap> terms;
    for (int d = 0; d <= f.max_degree(); ++d) {
        HomogeneousMap::Terms t;
        for (int i = basis.degree_begin(d); i < basis.degree_end(d); ++i) {
            VectorXc v = VectorXc::Zero(f.output_dim());
            bool any = false;
            for (int c = 0; c < f.output_dim(); ++c)
                if (f.components[c].is_nonzero(i) && f.components[c][i] != Complex(0)) {
                    v[c] = f.components[c][i];
                    any = true;
                }
            if (any)
                t.emplace_back(basis.exponent(i), std::move(v));
        }
        terms.push_back(HomogeneousMap::from_terms(d, f.input_dim(), f.output_dim(), std::move(t)));
    }
    return PowerSeriesMap(center, std::move(terms), kind, radius);
}

VectorXc LaurentCoefficients::evaluate(Complex zeta) const
{
    if (coeffs.empty())
        return VectorXc();
    VectorXc out = VectorXc::Zero(coeffs.front().size());
    for (int k = k_min; k <= k_max(); ++k)
        out += at(k) * std::pow(zeta, k);
    return out;
}

double LaurentCoefficients::negative_magnitude(double rho) const
{
    double m = 0.0;
    for (int k = k_min; k <= std::min(-1, k_max()); ++k)
        m = std::max(m, at(k).norm() * std::pow(rho, k));
    return m;
}

void write_series_csv(std::ostream& os, const PowerSeriesMap& s)
{
    os << "degree,multi_index,component,re,im\n";
    for (const auto& term : s.terms()) {
        if (!term.is_dense())
            fail(ErrorCode::InvalidArgument, "callable-only term cannot be serialized");
        for (const auto& [e, coeff] : term.terms()) {
            std::string idx;
            for (std::size_t j = 0; j < e.size(); ++j)
                idx += (j ? ";" : "") + std::to_string(e[j]);
            for (Eigen::Index c = 0; c < coeff.size(); ++c)
                os << term.degree() << ',' << idx << ',' << c << ',' << format_double(coeff[c].real()) << ','
                   << format_double(coeff[c].imag()) << '\n';
        }
    }
}

PowerSeriesMap read_series_csv(std::istream& is, const TruncatedVector<>& center, SeriesKind kind,
                               std::optional<double> radius)
{
    std::string line;
    if (!std::getline(is, line) || trim(line) != "degree,multi_index,component,re,im")
        fail(ErrorCode::ConfigError, "series CSV is missing its header");
    std::map<Exponent, std::map<int, Complex>> rows;
    std::vector<Exponent> order;
    int inputs = -1, outputs = 0, degree = 0;
    while (std::getline(is, line)) {
        if (trim(line).empty())
            continue;
        const auto cols = split(trim(line), ',');
        if (cols.size() != 5)
            fail(ErrorCode::ConfigError, "series CSV row needs 5 columns: " + line);
        Exponent e;
        for (const auto& part : split(cols[1], ';'))
            e.push_back(parse_int(part));
        if (inputs < 0)
            inputs = static_cast<int>(e.size());
        if (static_cast<int>(e.size()) != inputs || exponent_degree(e) != parse_int(cols[0]))
            fail(ErrorCode::ConfigError, "series CSV row has an inconsistent multi-index: " + line);
        const int comp = parse_int(cols[2]);
        if (comp < 0)
            fail(ErrorCode::ConfigError, "negative component index in series CSV");
        outputs = std::max(outputs, comp + 1);
        degree = std::max(degree, exponent_degree(e));
        if (!rows.count(e))
            order.push_back(e);
        rows[e][comp] += Complex(parse_double(cols[3]), parse_double(cols[4]));
    }
    if (inputs < 0)
        fail(ErrorCode::ConfigError, "series CSV has no rows");
    std::vector<HomogeneousMap::Terms> by_degree(degree + 1);
    for (const auto& e : order) {
        VectorXc v = VectorXc::Zero(outputs);
        for (const auto& [c, val] : rows.at(e))
            v[c] = val;
        by_degree[exponent_degree(e)].emplace_back(e, v);
    }
    std::vector<HomogeneousMap> terms;
    for (int d = 0; d <= degree; ++d)
        terms.push_back(HomogeneousMap::from_terms(d, inputs, outputs, std::move(by_degree[d])));
    return PowerSeriesMap(center, std::move(terms), kind, radius);
}

} // namespace hk
