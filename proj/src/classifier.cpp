#include "mea/classifier.hpp"

#include "mea/errors.hpp"
#include "mea/io_util.hpp"
#include "mea/rng.hpp"

#include <cmath>
#include <numeric>

namespace mea {

namespace {

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> x)
{
    return {x.data(), static_cast<Eigen::Index>(x.size())};
}

void check_dims(const perceptron& model, std::span<const double> x)
{
    if (static_cast<int>(x.size()) != model.dim())
        throw validation_error("feature width " + std::to_string(x.size()) + " does not match model width " +
                               std::to_string(model.dim()));
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits)
{
    const double m = logits.maxCoeff();
    Eigen::VectorXd p = (logits.array() - m).exp().matrix();
    return p / p.sum();
}

}  // namespace

std::vector<std::vector<std::size_t>> split_permutations(std::span<const std::size_t> class_sizes, const split_spec& spec)
{
    if (spec.n_train < 0 || spec.n_test < 0) throw validation_error("split sizes must be >= 0");
    const auto per = static_cast<std::size_t>(spec.n_train + spec.n_test);
    rng gen(spec.seed);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t k = 0; k < class_sizes.size(); ++k) {
        if (class_sizes[k] != per)
            throw validation_error("class " + std::to_string(k) + " has " + std::to_string(class_sizes[k]) +
                                   " samples, split expects " + std::to_string(per));
        std::vector<std::size_t> idx(per);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        gen.shuffle(idx);
        out.push_back(std::move(idx));
    }
    return out;
}

split_result split(std::span<const dataset> per_class, const split_spec& spec)
{
    std::vector<std::size_t> sizes;
    for (const auto& c : per_class) sizes.push_back(c.size());
    const auto perms = split_permutations(sizes, spec);
    split_result out;
    for (std::size_t k = 0; k < per_class.size(); ++k)
        for (std::size_t i = 0; i < perms[k].size(); ++i)
            (i < static_cast<std::size_t>(spec.n_train) ? out.train : out.test).push_back(per_class[k][perms[k][i]]);
    return out;
}

Eigen::VectorXd forward(const perceptron& model, std::span<const double> x)
{
    check_dims(model, x);
    const auto xv = as_vector(x);
    if (!xv.allFinite()) throw validation_error("forward: non-finite input");
    return softmax(model.weights * xv + model.bias);
}

loss_gradient cross_entropy_gradient(const perceptron& model, std::span<const double> x, int label)
{
    if (label < 0 || label >= model.classes()) throw validation_error("label out of range");
    Eigen::VectorXd p = forward(model, x);
    const Eigen::VectorXd logits = model.weights * as_vector(x) + model.bias;
    const double m = logits.maxCoeff();
    const double lse = m + std::log((logits.array() - m).exp().sum());
    const double loss = lse - logits(label);
    p(label) -= 1.0;
    return {loss, p * as_vector(x).transpose(), p};
}

double mean_loss(const perceptron& model, std::span<const labeled_sample> data)
{
    if (data.empty()) return 0.0;
    double total = 0.0;
    for (const auto& s : data) {
        check_dims(model, s.x);
        const Eigen::VectorXd logits = model.weights * as_vector(s.x) + model.bias;
        const double m = logits.maxCoeff();
        total += m + std::log((logits.array() - m).exp().sum()) - logits(s.label);
    }
    return total / static_cast<double>(data.size());
}

std::vector<std::vector<std::size_t>> epoch_orders(std::size_t n, const train_spec& spec)
{
    rng gen(spec.seed);
    std::vector<std::vector<std::size_t>> orders;
    for (int e = 0; e < spec.epochs; ++e) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        gen.shuffle(idx);
        orders.push_back(std::move(idx));
    }
    return orders;
}

perceptron train(std::span<const labeled_sample> data, const train_spec& spec, int classes,
                 std::vector<double>* loss_history)
{
    if (data.empty()) throw validation_error("train: empty training set");
    if (spec.epochs < 1) throw validation_error("train: epochs must be >= 1");
    if (spec.batch_size < 1) throw validation_error("train: batch_size must be >= 1");
    if (classes < 2) throw validation_error("train: need at least 2 classes");
    const auto dim = data.front().x.size();
    for (const auto& s : data) {
        if (s.x.size() != dim) throw validation_error("train: inconsistent feature widths");
        if (s.label < 0 || s.label >= classes) throw validation_error("train: label out of range");
    }

    perceptron model(classes, static_cast<int>(dim));
    if (loss_history) loss_history->assign(1, mean_loss(model, data));

    const auto orders = epoch_orders(data.size(), spec);
    const auto batch = static_cast<std::size_t>(spec.batch_size);
    Eigen::MatrixXd gw(classes, static_cast<Eigen::Index>(dim));
    Eigen::VectorXd gb(classes);
    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        const auto& order = orders[static_cast<std::size_t>(epoch)];
        for (std::size_t start = 0, b = 0; start < order.size(); start += batch, ++b) {
            const auto end = std::min(order.size(), start + batch);
            gw.setZero();
            gb.setZero();
            for (std::size_t i = start; i < end; ++i) {
                const auto& s = data[order[i]];
                auto g = cross_entropy_gradient(model, s.x, s.label);
                if (!std::isfinite(g.loss))
                    throw numeric_error("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                        std::to_string(b));
                gw += g.d_weights;
                gb += g.d_bias;
            }
            const double step = spec.learning_rate / static_cast<double>(end - start);
            model.weights -= step * gw;
            model.bias -= step * gb;
        }
        if (loss_history) {
            const double l = mean_loss(model, data);
            if (!std::isfinite(l)) throw numeric_error("non-finite loss after epoch " + std::to_string(epoch));
            loss_history->push_back(l);
        }
    }
    return model;
}

int predict(const perceptron& model, std::span<const double> x)
{
    const auto p = forward(model, x);
    int best = 0;
    for (int k = 1; k < p.size(); ++k)
        if (p(k) > p(best)) best = k;
    return best;
}

evaluation evaluate(const perceptron& model, std::span<const labeled_sample> test)
{
    if (test.empty()) throw validation_error("evaluate: empty test set");
    const int k = model.classes();
    std::vector<int> correct(static_cast<std::size_t>(k), 0);
    evaluation ev;
    ev.per_class_count.assign(static_cast<std::size_t>(k), 0);
    int total_correct = 0;
    for (const auto& s : test) {
        if (s.label < 0 || s.label >= k) throw validation_error("evaluate: label out of range");
        ++ev.per_class_count[static_cast<std::size_t>(s.label)];
        if (predict(model, s.x) == s.label) {
            ++correct[static_cast<std::size_t>(s.label)];
            ++total_correct;
        }
    }
    ev.accuracy = static_cast<double>(total_correct) / static_cast<double>(test.size());
    ev.per_class_recall.resize(static_cast<std::size_t>(k));
    for (std::size_t c = 0; c < correct.size(); ++c)
        ev.per_class_recall[c] = ev.per_class_count[c] ? static_cast<double>(correct[c]) / ev.per_class_count[c] : 0.0;
    return ev;
}

std::string model_to_text(const perceptron& model)
{
    std::string out = "PERCEPTRON " + std::to_string(model.classes()) + " " + std::to_string(model.dim()) + "\n";
    for (int k = 0; k < model.classes(); ++k) {
        for (int j = 0; j < model.dim(); ++j) {
            out += io::format_double(model.weights(k, j));
            out += ' ';
        }
        out += io::format_double(model.bias(k));
        out += '\n';
    }
    return out;
}

perceptron parse_model(std::string_view text)
{
    auto ls = io::lines(text);
    if (ls.empty()) throw validation_error("model: empty file");
    auto head = io::split(io::trim(ls[0]), ' ');
    if (head.size() != 3 || head[0] != "PERCEPTRON") throw validation_error("model: bad header");
    const auto k = io::parse_int(head[1]);
    const auto dim = io::parse_int(head[2]);
    if (k < 2 || dim < 1) throw validation_error("model: bad dimensions");
    if (static_cast<long long>(ls.size()) < k + 1) throw validation_error("model: truncated");
    perceptron m(static_cast<int>(k), static_cast<int>(dim));
    for (long long r = 0; r < k; ++r) {
        auto f = io::split(io::trim(ls[static_cast<std::size_t>(r + 1)]), ' ');
        if (static_cast<long long>(f.size()) != dim + 1) throw validation_error("model: row width mismatch");
        for (long long j = 0; j < dim; ++j) m.weights(r, j) = io::parse_double(f[static_cast<std::size_t>(j)]);
        m.bias(r) = io::parse_double(f.back());
    }
    if (!m.weights.allFinite() || !m.bias.allFinite()) throw validation_error("model: non-finite parameters");
    return m;
}

void write_model(const std::filesystem::path& path, const perceptron& model)
{
    io::write_file(path, model_to_text(model));
}

perceptron read_model(const std::filesystem::path& path) { return parse_model(io::read_file(path)); }

std::string evaluation_to_csv(const evaluation& ev)
{
    std::string out = "class,n,accuracy\n";
    for (std::size_t c = 0; c < ev.per_class_recall.size(); ++c)
        out += std::to_string(c) + "," + std::to_string(ev.per_class_count[c]) + "," +
               io::format_double(ev.per_class_recall[c]) + "\n";
    int n = 0;
    for (int c : ev.per_class_count) n += c;
    out += "overall," + std::to_string(n) + "," + io::format_double(ev.accuracy) + "\n";
    return out;
}

}  // namespace mea
