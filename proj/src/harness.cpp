#include "nnal/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <tuple>

#include "nnal/error.hpp"
#include "nnal/text.hpp"

namespace nnal {

namespace {

template <class T, class Fn>
std::string join(const std::vector<T>& items, char sep, Fn&& fmt) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += fmt(items[i]);
    }
    return out;
}

std::string join_ids(const std::vector<SampleId>& ids, char sep = ';') {
    return join(ids, sep, [](SampleId id) { return std::to_string(id); });
}

std::string join_numbers(const std::vector<double>& xs, char sep = ';') {
    return join(xs, sep, [](double x) { return text::format_number(x); });
}

std::string describe(const TrainConfig& c) {
    std::ostringstream out;
    out << "max_epochs=" << c.max_epochs << " learning_rate=" << text::format_number(c.learning_rate)
        << " momentum=" << text::format_number(c.momentum) << " patience=" << c.early_stop_patience
        << " holdout_fraction=" << text::format_number(c.holdout_fraction);
    return out.str();
}

Seed repeat_seed(Seed master, std::size_t repeat) { return derive_seed(master, 1000 + repeat); }

auto row_key(const CurveRow& r) {
    return std::make_tuple(r.init_size, static_cast<int>(r.strategy), r.repeat, r.iteration);
}

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::size_t parse_count(std::string_view field, std::size_t line, const char* column) {
    const auto v = text::parse_long(field);
    if (!v || *v < 0) throw ParseError("line " + std::to_string(line) + ", column " + column + ": not a count");
    return static_cast<std::size_t>(*v);
}

}  // namespace

void ExperimentConfig::validate(std::size_t dataset_size) const {
    if (repeats < 1) throw StateError("repeats must be at least 1");
    if (init_sizes.empty()) throw StateError("at least one initial training size is required");
    if (strategies.empty()) throw StateError("at least one strategy is required");
    if (batch_size < 1) throw StateError("batch size must be at least 1");
    if (ensemble_size < 2) throw StateError("ensemble size must be at least 2");
    if (val_size < 1) throw StateError("validation size must be at least 1");
    const std::size_t largest = *std::max_element(init_sizes.begin(), init_sizes.end());
    if (val_size + largest >= dataset_size) {
        throw SizeError("validation size " + std::to_string(val_size) + " plus initial size " +
                        std::to_string(largest) + " must be below the dataset size " + std::to_string(dataset_size));
    }
    const std::size_t smallest = *std::min_element(init_sizes.begin(), init_sizes.end());
    if (smallest < 4) throw SizeError("initial training sets need at least 4 samples");
    if (pca_k < 1 || pca_k >= smallest) {
        throw SizeError("PCA component count must be in [1, smallest initial size - 1]");
    }
    if (target_rmse && !(*target_rmse >= 0.0)) throw StateError("target RMSE must be nonnegative");
    prediction_train.validate();
    inversion_train.validate();
}

LearningCurve run_experiment(const ExperimentConfig& config, const SampleSet& data, const ProgressFn& progress) {
    config.validate(data.size());

    LearningCurve curve;
    auto meta = [&curve](std::string key, std::string value) {
        curve.metadata.emplace_back(std::move(key), std::move(value));
    };
    const Seed validation_seed = derive_seed(config.master_seed, 0);
    const Partition base = split_validation(data, config.val_size, validation_seed);

    meta("version", kVersion);
    meta("data_path", config.data_path.string());
    meta("data_rows", std::to_string(data.size()));
    meta("val_size", std::to_string(config.val_size));
    meta("validation_seed", std::to_string(validation_seed));
    meta("validation_ids", join_ids(base.validation.ids()));
    meta("init_sizes", join(config.init_sizes, ',', [](std::size_t n) { return std::to_string(n); }));
    meta("init_method", to_string(config.init_method));
    meta("batch_size", std::to_string(config.batch_size));
    meta("ensemble_size", std::to_string(config.ensemble_size));
    meta("repeats", std::to_string(config.repeats));
    meta("strategies", join(config.strategies, ',', [](Strategy s) { return to_string(s); }));
    meta("master_seed", std::to_string(config.master_seed));
    meta("pca_k", std::to_string(config.pca_k));
    meta("pca_refit", to_string(config.pca_refit));
    meta("disagreement", config.disagreement == DisagreementMetric::std_dev ? "std" : "var");
    meta("target_rmse", config.target_rmse ? text::format_number(*config.target_rmse) : "none");
    meta("stop_at_target", config.stop_at_target ? "true" : "false");
    meta("prediction_train", describe(config.prediction_train));
    meta("inversion_train", describe(config.inversion_train));

    for (std::size_t init_size : config.init_sizes) {
        for (std::size_t r = 0; r < config.repeats; ++r) {
            const Seed rs = repeat_seed(config.master_seed, r);
            const Seed init_seed = derive_seed(rs, init_size);
            const Seed loop_seed = derive_seed(rs, 1'000'000 + init_size);
            const std::string run = "run." + std::to_string(init_size) + "." + std::to_string(r);
            meta(run + ".init_seed", std::to_string(init_seed));
            meta(run + ".loop_seed", std::to_string(loop_seed));

            const Partition start = draw_initial(base, init_size, config.init_method, init_seed);
            meta(run + ".initial_ids", join_ids(start.training.ids()));

            LoopConfig loop;
            loop.batch_size = config.batch_size;
            loop.ensemble_size = config.ensemble_size;
            loop.prediction_train = config.prediction_train;
            loop.inversion_train = config.inversion_train;
            loop.pca_k = config.pca_k;
            loop.pca_refit = config.pca_refit;
            loop.disagreement = config.disagreement;
            if (config.stop_at_target) loop.target_rmse = config.target_rmse;
            loop.seed = loop_seed;
            loop.threads = config.threads;

            for (Strategy strategy : config.strategies) {
                curve.starts.push_back(
                    {init_size, r, strategy, start.validation.ids(), start.training.ids()});
                auto emit = [&](const IterationRecord& rec) {
                    CurveRow row{strategy,        init_size,    r,
                                 rec.iteration,   rec.n_train,  rec.rmse_val,
                                 rec.buffer_mean_fat, rec.chosen_ids, rec.chosen_fats};
                    if (progress) progress(row);
                    curve.rows.push_back(std::move(row));
                };
                try {
                    run_loop(start, strategy, loop, emit);
                } catch (const std::exception& e) {
                    rethrow_with_context(e, to_string(strategy) + " init " + std::to_string(init_size) + " repeat " +
                                                std::to_string(r));
                }
            }
        }
    }
    std::stable_sort(curve.rows.begin(), curve.rows.end(),
                     [](const CurveRow& a, const CurveRow& b) { return row_key(a) < row_key(b); });
    return curve;
}

LearningCurve run_experiment(const ExperimentConfig& config, const ProgressFn& progress) {
    return run_experiment(config, load_samples(config.data_path), progress);
}

std::vector<AverageRow> average_curves(std::span<const CurveRow> rows) {
    std::map<std::tuple<std::size_t, int, std::size_t>, std::vector<double>> groups;
    for (const auto& r : rows) groups[{r.init_size, static_cast<int>(r.strategy), r.n_train}].push_back(r.rmse_val);
    std::vector<AverageRow> out;
    for (const auto& [key, values] : groups) {
        const auto& [init_size, strategy, n_train] = key;
        const double n = static_cast<double>(values.size());
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= n;
        double var = 0.0;
        for (double v : values) var += (v - mean) * (v - mean);
        out.push_back({static_cast<Strategy>(strategy), init_size, n_train, values.size(), mean, std::sqrt(var / n)});
    }
    return out;
}

std::vector<CurvePoint> averaged_points(std::span<const AverageRow> rows, Strategy strategy, std::size_t init_size) {
    std::vector<CurvePoint> points;
    for (const auto& r : rows) {
        if (r.strategy == strategy && r.init_size == init_size) points.push_back({r.n_train, r.rmse_mean});
    }
    std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) { return a.n_train < b.n_train; });
    return points;
}

std::vector<CurvePoint> run_points(std::span<const CurveRow> rows, Strategy strategy, std::size_t init_size,
                                   std::size_t repeat) {
    std::vector<CurvePoint> points;
    for (const auto& r : rows) {
        if (r.strategy == strategy && r.init_size == init_size && r.repeat == repeat) {
            points.push_back({r.n_train, r.rmse_val});
        }
    }
    std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) { return a.n_train < b.n_train; });
    return points;
}

std::optional<std::size_t> samples_to_target(std::span<const CurvePoint> points, double target) {
    std::vector<CurvePoint> sorted(points.begin(), points.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const CurvePoint& a, const CurvePoint& b) { return a.n_train < b.n_train; });
    for (const auto& p : sorted) {
        if (p.rmse <= target) return p.n_train;
    }
    return std::nullopt;
}

void write_report(const LearningCurve& curve, const std::filesystem::path& dir) {
    if (curve.rows.empty()) throw SizeError("cannot write a report for an empty learning curve");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());

    {
        const auto path = dir / "curves.csv";
        auto out = open_for_write(path);
        out << "strategy,init_size,repeat,iteration,n_train,rmse_val,buffer_mean_fat,chosen_ids,chosen_fats\n";
        for (const auto& r : curve.rows) {
            out << to_string(r.strategy) << ',' << r.init_size << ',' << r.repeat << ',' << r.iteration << ','
                << r.n_train << ',' << text::format_number(r.rmse_val) << ','
                << text::format_number(r.buffer_mean_fat) << ',' << join_ids(r.chosen_ids) << ','
                << join_numbers(r.chosen_fats) << '\n';
        }
        finish(out, path);
    }
    {
        const auto path = dir / "curves_avg.csv";
        auto out = open_for_write(path);
        out << "strategy,init_size,n_train,repeats,rmse_mean,rmse_std\n";
        for (const auto& a : average_curves(curve.rows)) {
            out << to_string(a.strategy) << ',' << a.init_size << ',' << a.n_train << ',' << a.repeats << ','
                << text::format_number(a.rmse_mean) << ',' << text::format_number(a.rmse_std) << '\n';
        }
        finish(out, path);
    }
    {
        const auto path = dir / "selections.csv";
        auto out = open_for_write(path);
        out << "strategy,init_size,repeat,iteration,rank,id,fat\n";
        for (const auto& r : curve.rows) {
            for (std::size_t i = 0; i < r.chosen_ids.size(); ++i) {
                out << to_string(r.strategy) << ',' << r.init_size << ',' << r.repeat << ',' << r.iteration << ','
                    << i << ',' << r.chosen_ids[i] << ',' << text::format_number(r.chosen_fats[i]) << '\n';
            }
        }
        finish(out, path);
    }
    {
        const auto path = dir / "metadata.txt";
        auto out = open_for_write(path);
        for (const auto& [key, value] : curve.metadata) out << key << '=' << value << '\n';
        finish(out, path);
    }
}

std::vector<CurveRow> read_curves(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": missing header");
    std::vector<CurveRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        const auto f = text::split(text::trim(line), ',');
        if (f.size() != 9) throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": expected 9 columns");
        CurveRow r;
        r.strategy = parse_strategy(std::string(f[0]));
        r.init_size = parse_count(f[1], line_no, "init_size");
        r.repeat = parse_count(f[2], line_no, "repeat");
        r.iteration = parse_count(f[3], line_no, "iteration");
        r.n_train = parse_count(f[4], line_no, "n_train");
        const auto rmse_val = text::parse_double(f[5]);
        const auto buffer_mean = text::parse_double(f[6]);
        if (!rmse_val || !buffer_mean) {
            throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": bad number");
        }
        r.rmse_val = *rmse_val;
        r.buffer_mean_fat = *buffer_mean;
        if (!text::trim(f[7]).empty()) {
            for (auto id : text::split(f[7], ';')) r.chosen_ids.push_back(static_cast<SampleId>(parse_count(id, line_no, "chosen_ids")));
            for (auto fat : text::split(f[8], ';')) {
                const auto v = text::parse_double(fat);
                if (!v) throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": bad chosen fat");
                r.chosen_fats.push_back(*v);
            }
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<std::pair<std::string, std::string>> read_metadata(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto pos = line.find('=');
        if (pos == std::string::npos) continue;
        out.emplace_back(line.substr(0, pos), line.substr(pos + 1));
    }
    return out;
}

std::string comparison_table(std::span<const AverageRow> rows, double target) {
    std::map<std::pair<std::size_t, int>, bool> keys;
    for (const auto& r : rows) keys[{r.init_size, static_cast<int>(r.strategy)}] = true;

    std::ostringstream out;
    out << "target RMSE " << text::format_number(target) << '\n';
    out << std::left << std::setw(10) << "init" << std::setw(12) << "strategy" << std::setw(18) << "samples_to_target"
        << std::setw(10) << "final_n" << "final_rmse\n";
    for (const auto& [key, unused] : keys) {
        const auto strategy = static_cast<Strategy>(key.second);
        const auto points = averaged_points(rows, strategy, key.first);
        const auto reached = samples_to_target(points, target);
        std::ostringstream rmse;
        rmse << std::fixed << std::setprecision(4) << points.back().rmse;
        out << std::left << std::setw(10) << key.first << std::setw(12) << to_string(strategy) << std::setw(18)
            << (reached ? std::to_string(*reached) : std::string("none")) << std::setw(10) << points.back().n_train
            << rmse.str() << '\n';
    }
    return out.str();
}

}  // namespace nnal
