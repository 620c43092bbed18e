#include "mea/response_stats.hpp"

#include "mea/errors.hpp"
#include "mea/io_util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>

namespace mea {

namespace {

void check_window(const spike_raster& raster, std::int64_t begin, std::int64_t end)
{
    if (begin < 0 || end > raster.duration_samples() || end <= begin)
        throw bounds_error("window [" + std::to_string(begin) + ", " + std::to_string(end) +
                           ") outside the recording [0, " + std::to_string(raster.duration_samples()) + ")");
}

std::int64_t count_in(std::span<const std::int64_t> ch, std::int64_t begin, std::int64_t end)
{
    auto lo = std::lower_bound(ch.begin(), ch.end(), begin);
    auto hi = std::lower_bound(lo, ch.end(), end);
    return hi - lo;
}

// Modified Lentz evaluation of the incomplete-beta continued fraction.
double beta_continued_fraction(double a, double b, double x)
{
    constexpr int max_iter = 10000;
    constexpr double eps = 1e-16;
    constexpr double tiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    throw numeric_error("incomplete beta continued fraction did not converge");
}

struct critical_values {
    double t95;
    double t99;
};

critical_values critical_for(int n)
{
    static std::mutex mu;
    static std::map<int, critical_values> cache;
    std::lock_guard lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    const double dof = n - 1;
    critical_values cv{student_t_quantile(0.975, dof), student_t_quantile(0.995, dof)};
    cache.emplace(n, cv);
    return cv;
}

}  // namespace

std::int64_t activity(const spike_raster& raster, electrode_coord electrode, std::int64_t t_s, std::int64_t c_samples)
{
    if (!in_grid(electrode)) throw bounds_error("activity: electrode off grid");
    check_window(raster, t_s, t_s + c_samples);
    return count_in(raster.channel(electrode), t_s, t_s + c_samples);
}

std::int64_t response(const spike_raster& raster, electrode_coord electrode, std::int64_t t_s, std::int64_t c_samples)
{
    if (!in_grid(electrode)) throw bounds_error("response: electrode off grid");
    check_window(raster, t_s - c_samples, t_s + c_samples);
    const auto ch = raster.channel(electrode);
    return count_in(ch, t_s, t_s + c_samples) - count_in(ch, t_s - c_samples, t_s);
}

double regularized_incomplete_beta(double a, double b, double x)
{
    if (!(a > 0.0 && b > 0.0)) throw validation_error("incomplete beta needs a, b > 0");
    if (!(x >= 0.0 && x <= 1.0)) throw validation_error("incomplete beta needs x in [0, 1]");
    if (x == 0.0 || x == 1.0) return x;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double dof)
{
    if (!(dof > 0.0)) throw validation_error("t distribution needs dof > 0");
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    const double x = dof / (dof + t * t);
    const double tail = 0.5 * regularized_incomplete_beta(0.5 * dof, 0.5, x);
    return t > 0.0 ? 1.0 - tail : tail;
}

double student_t_quantile(double p, double dof)
{
    if (!(p > 0.0 && p < 1.0)) throw validation_error("t quantile needs p in (0, 1)");
    if (p == 0.5) return 0.0;
    if (p < 0.5) return -student_t_quantile(1.0 - p, dof);
    double lo = 0.0, hi = 1.0;
    while (student_t_cdf(hi, dof) < p) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) throw numeric_error("t quantile bracket overflow");
    }
    for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (student_t_cdf(mid, dof) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::string_view to_string(response_category c) noexcept
{
    switch (c) {
    case response_category::pos99: return "pos99";
    case response_category::pos95: return "pos95";
    case response_category::none: return "none";
    case response_category::neg95: return "neg95";
    case response_category::neg99: return "neg99";
    }
    return "?";
}

response_category parse_response_category(std::string_view s)
{
    s = io::trim(s);
    for (auto c : {response_category::pos99, response_category::pos95, response_category::none,
                   response_category::neg95, response_category::neg99})
        if (to_string(c) == s) return c;
    throw validation_error("unknown response category '" + std::string(s) + "'");
}

response_category categorize(double mean, double sd, int n)
{
    if (n < 2) throw validation_error("categorize needs n >= 2");
    if (sd == 0.0) {
        if (mean > 0.0) return response_category::pos99;
        if (mean < 0.0) return response_category::neg99;
        return response_category::none;
    }
    const auto cv = critical_for(n);
    const double se = sd / std::sqrt(static_cast<double>(n));
    if (mean - cv.t99 * se > 0.0) return response_category::pos99;
    if (mean - cv.t95 * se > 0.0) return response_category::pos95;
    if (mean + cv.t99 * se < 0.0) return response_category::neg99;
    if (mean + cv.t95 * se < 0.0) return response_category::neg95;
    return response_category::none;
}

response_map aggregate(std::span<const trial_recording> trials, std::int64_t c_samples)
{
    if (trials.size() < 2) throw validation_error("aggregate needs at least 2 trials");
    const auto duration = trials.front().raster.duration_samples();
    const auto onset = trials.front().stimulus_onset_sample;
    for (const auto& tr : trials) {
        if (tr.raster.duration_samples() != duration || tr.stimulus_onset_sample != onset)
            throw validation_error("aggregate: trials differ in duration or onset alignment");
    }

    const int n = static_cast<int>(trials.size());
    response_map map;
    std::vector<double> r(trials.size());
    for (int e = 0; e < electrode_count; ++e) {
        const auto coord = electrode_at(e);
        double sum = 0.0;
        for (std::size_t i = 0; i < trials.size(); ++i) {
            r[i] = static_cast<double>(response(trials[i].raster, coord, onset, c_samples));
            sum += r[i];
        }
        const double mean = sum / n;
        double ss = 0.0;
        for (double x : r) ss += (x - mean) * (x - mean);
        const double sd = std::sqrt(ss / (n - 1));
        map.cells[static_cast<std::size_t>(e)] = {mean, sd, n, categorize(mean, sd, n)};
    }
    return map;
}

rgb category_color(response_category c) noexcept
{
    switch (c) {
    case response_category::pos99: return {255, 0, 0};
    case response_category::pos95: return {0, 255, 0};
    case response_category::neg95: return {0, 255, 255};
    case response_category::neg99: return {255, 255, 0};
    case response_category::none: return {0, 0, 0};
    }
    return {0, 0, 0};
}

std::string map_image_bytes(const response_map& map)
{
    std::string out = "P6\n64 64\n255\n";
    out.reserve(out.size() + 3 * electrode_count);
    for (const auto& cell : map.cells) {
        const auto c = category_color(cell.category);
        out.push_back(static_cast<char>(c.r));
        out.push_back(static_cast<char>(c.g));
        out.push_back(static_cast<char>(c.b));
    }
    return out;
}

void write_map_image(const response_map& map, const std::filesystem::path& path)
{
    io::write_file(path, map_image_bytes(map));
}

std::vector<response_category> read_map_image(const std::filesystem::path& path)
{
    const auto bytes = io::read_file(path);
    const std::string header = "P6\n64 64\n255\n";
    if (bytes.compare(0, header.size(), header) != 0 || bytes.size() != header.size() + 3 * electrode_count)
        throw validation_error("not a 64x64 P6 response map: " + path.string());
    std::vector<response_category> out;
    out.reserve(electrode_count);
    for (std::size_t i = header.size(); i < bytes.size(); i += 3) {
        const rgb px{static_cast<std::uint8_t>(bytes[i]), static_cast<std::uint8_t>(bytes[i + 1]),
                     static_cast<std::uint8_t>(bytes[i + 2])};
        bool found = false;
        for (auto c : {response_category::pos99, response_category::pos95, response_category::none,
                       response_category::neg95, response_category::neg99}) {
            if (category_color(c) == px) {
                out.push_back(c);
                found = true;
                break;
            }
        }
        if (!found) throw validation_error("unexpected colour in response map");
    }
    return out;
}

std::string map_to_csv(const response_map& map)
{
    std::string out = "row,col,mean,sd,category\n";
    for (int e = 0; e < electrode_count; ++e) {
        const auto& c = map.cells[static_cast<std::size_t>(e)];
        out += std::to_string(e / grid_side) + "," + std::to_string(e % grid_side) + "," + io::format_double(c.mean) +
               "," + io::format_double(c.sd) + "," + std::string(to_string(c.category)) + "\n";
    }
    return out;
}

}  // namespace mea
