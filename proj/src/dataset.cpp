#include "nnal/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <unordered_set>

#include "nnal/error.hpp"
#include "nnal/text.hpp"

namespace nnal {

namespace {

constexpr std::size_t kColumns = 1 + kSpectrumChannels + 3;
constexpr int kSpacefillBins = 10;

std::vector<std::string> expected_header() {
    std::vector<std::string> names{"id"};
    for (std::size_t i = 0; i < kSpectrumChannels; ++i) {
        std::string ch = "ch000";
        ch[2] = static_cast<char>('0' + i / 100);
        ch[3] = static_cast<char>('0' + (i / 10) % 10);
        ch[4] = static_cast<char>('0' + i % 10);
        names.push_back(ch);
    }
    names.insert(names.end(), {"moisture", "fat", "protein"});
    return names;
}

std::string row_label(std::size_t row) { return "row " + std::to_string(row); }

double parse_required(std::string_view field, std::size_t row, const std::string& column) {
    const auto value = text::parse_double(field);
    if (!value) {
        throw ParseError(row_label(row) + ", column " + column + ": not a number: '" +
                         std::string(text::trim(field)) + "'");
    }
    if (!std::isfinite(*value)) {
        throw ParseError(row_label(row) + ", column " + column + ": non-finite value");
    }
    return *value;
}

std::optional<double> parse_optional(std::string_view field, std::size_t row, const std::string& column) {
    if (text::trim(field).empty()) return std::nullopt;
    return parse_required(field, row, column);
}

Partition with_sets(const Partition& base, SampleSet training, SampleSet buffer) {
    Partition out{base.validation, std::move(training), std::move(buffer), base.source_size};
    out.check_invariants();
    return out;
}

std::vector<Sample> spacefill_pick(const SampleSet& buffer, std::size_t n_init) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& s : buffer) {
        lo = std::min(lo, s.fat);
        hi = std::max(hi, s.fat);
    }
    const double width = (hi - lo) / kSpacefillBins;

    std::vector<std::vector<const Sample*>> bins(kSpacefillBins);
    for (const auto& s : buffer) {
        int bin = width > 0.0 ? static_cast<int>(std::floor((s.fat - lo) / width)) : 0;
        bin = std::clamp(bin, 0, kSpacefillBins - 1);
        bins[bin].push_back(&s);
    }
    // Within each bin, order by distance to the center, then id.
    for (int b = 0; b < kSpacefillBins; ++b) {
        const double center = lo + (b + 0.5) * width;
        std::sort(bins[b].begin(), bins[b].end(), [center](const Sample* x, const Sample* y) {
            const double dx = std::abs(x->fat - center);
            const double dy = std::abs(y->fat - center);
            if (dx != dy) return dx < dy;
            return x->id < y->id;
        });
    }

    std::vector<Sample> chosen;
    std::vector<std::size_t> next(kSpacefillBins, 0);
    while (chosen.size() < n_init) {
        for (int b = 0; b < kSpacefillBins && chosen.size() < n_init; ++b) {
            if (next[b] < bins[b].size()) chosen.push_back(*bins[b][next[b]++]);
        }
    }
    return chosen;
}

}  // namespace

void validate_sample(const Sample& sample) {
    const std::string who = "sample " + std::to_string(sample.id);
    if (sample.spectrum.size() != kSpectrumChannels) {
        throw ParseError(who + ": spectrum has " + std::to_string(sample.spectrum.size()) +
                         " channels, expected " + std::to_string(kSpectrumChannels));
    }
    for (double a : sample.spectrum) {
        if (!std::isfinite(a)) throw ParseError(who + ": non-finite absorbance");
    }
    if (!std::isfinite(sample.fat) || sample.fat < 0.0 || sample.fat > 100.0) {
        throw ParseError(who + ": fat must be a finite percentage in [0, 100]");
    }
}

SampleSet::SampleSet(std::vector<Sample> samples, std::string provenance)
    : samples_(std::move(samples)), provenance_(std::move(provenance)) {
    std::unordered_set<SampleId> seen;
    for (const auto& s : samples_) {
        if (!seen.insert(s.id).second) {
            throw StateError("duplicate sample id " + std::to_string(s.id) + " in set '" + provenance_ + "'");
        }
    }
}

bool SampleSet::contains(SampleId id) const noexcept {
    return std::any_of(samples_.begin(), samples_.end(), [id](const Sample& s) { return s.id == id; });
}

const Sample& SampleSet::at_id(SampleId id) const {
    for (const auto& s : samples_) {
        if (s.id == id) return s;
    }
    throw MembershipError("sample id " + std::to_string(id) + " not in set '" + provenance_ + "'");
}

std::vector<SampleId> SampleSet::ids() const {
    std::vector<SampleId> out;
    out.reserve(samples_.size());
    for (const auto& s : samples_) out.push_back(s.id);
    return out;
}

std::vector<double> SampleSet::fats() const {
    std::vector<double> out;
    out.reserve(samples_.size());
    for (const auto& s : samples_) out.push_back(s.fat);
    return out;
}

void Partition::check_invariants() const {
    std::unordered_set<SampleId> seen;
    for (const SampleSet* set : {&validation, &training, &buffer}) {
        for (const auto& s : *set) {
            if (!seen.insert(s.id).second) {
                throw StateError("partition sets overlap at sample id " + std::to_string(s.id));
            }
        }
    }
    if (seen.size() != source_size) {
        throw StateError("partition holds " + std::to_string(seen.size()) + " samples, source had " +
                         std::to_string(source_size));
    }
}

InitMethod parse_init_method(const std::string& text) {
    if (text == "random") return InitMethod::random;
    if (text == "spacefill") return InitMethod::spacefill;
    throw ParseError("unknown init method '" + text + "' (expected random or spacefill)");
}

std::string to_string(InitMethod method) {
    return method == InitMethod::random ? "random" : "spacefill";
}

SampleSet load_samples(std::istream& in) {
    if (!in) throw IoError("sample stream is not readable");
    std::string line;
    if (!std::getline(in, line)) throw ParseError("missing header row");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

    const auto names = expected_header();
    const auto header = text::split(text::trim(line), ',');
    if (header.size() != kColumns) {
        throw ParseError("header has " + std::to_string(header.size()) + " columns, expected " +
                         std::to_string(kColumns));
    }
    for (std::size_t c = 0; c < kColumns; ++c) {
        if (text::trim(header[c]) != names[c]) {
            throw ParseError("header column " + std::to_string(c) + " is '" + std::string(header[c]) +
                             "', expected '" + names[c] + "'");
        }
    }

    std::vector<Sample> samples;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        const auto trimmed = text::trim(line);
        if (trimmed.empty()) continue;
        ++row;
        const auto fields = text::split(trimmed, ',');
        if (fields.size() != kColumns) {
            throw ParseError(row_label(row) + ": expected " + std::to_string(kColumns) + " columns, got " +
                             std::to_string(fields.size()));
        }
        if (!text::parse_long(fields[0])) {
            throw ParseError(row_label(row) + ", column id: not an integer");
        }
        Sample s;
        s.id = static_cast<SampleId>(samples.size());
        s.spectrum.reserve(kSpectrumChannels);
        for (std::size_t c = 0; c < kSpectrumChannels; ++c) {
            s.spectrum.push_back(parse_required(fields[1 + c], row, names[1 + c]));
        }
        s.moisture = parse_optional(fields[kColumns - 3], row, "moisture");
        s.fat = parse_required(fields[kColumns - 2], row, "fat");
        s.protein = parse_optional(fields[kColumns - 1], row, "protein");
        if (s.fat < 0.0 || s.fat > 100.0) {
            throw ParseError(row_label(row) + ", column fat: outside [0, 100]");
        }
        samples.push_back(std::move(s));
    }
    if (samples.empty()) throw EmptyInputError("no data rows after the header");
    return SampleSet(std::move(samples), "source");
}

SampleSet load_samples(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    try {
        return load_samples(in);
    } catch (const std::exception& e) {
        rethrow_with_context(e, path.string());
    }
}

void write_samples(std::ostream& out, const SampleSet& set) {
    const auto names = expected_header();
    for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
    out << '\n';
    for (const auto& s : set) {
        validate_sample(s);
        out << s.id;
        for (double a : s.spectrum) out << ',' << text::format_number(a);
        out << ',' << (s.moisture ? text::format_number(*s.moisture) : "");
        out << ',' << text::format_number(s.fat);
        out << ',' << (s.protein ? text::format_number(*s.protein) : "");
        out << '\n';
    }
    if (!out) throw IoError("failed writing samples");
}

Partition split_validation(const SampleSet& set, std::size_t val_size, Seed seed) {
    if (val_size >= set.size()) {
        throw SizeError("validation size " + std::to_string(val_size) + " must be smaller than the set (" +
                        std::to_string(set.size()) + ")");
    }
    Rng rng(seed);
    std::vector<bool> in_validation(set.size(), false);
    for (std::size_t pos : rng.sample_without_replacement(set.size(), val_size)) in_validation[pos] = true;

    std::vector<Sample> validation;
    std::vector<Sample> buffer;
    for (std::size_t i = 0; i < set.size(); ++i) {
        (in_validation[i] ? validation : buffer).push_back(set[i]);
    }
    Partition out{SampleSet(std::move(validation), "validation"), SampleSet({}, "training"),
                  SampleSet(std::move(buffer), "buffer"), set.size()};
    out.check_invariants();
    return out;
}

Partition draw_initial(const Partition& partition, std::size_t n_init, InitMethod method, Seed seed) {
    if (!partition.training.empty()) {
        throw StateError("initial draw requires an empty training set (has " +
                         std::to_string(partition.training.size()) + ")");
    }
    const SampleSet& buffer = partition.buffer;
    if (n_init > buffer.size()) {
        throw SizeError("cannot draw " + std::to_string(n_init) + " initial samples from a buffer of " +
                        std::to_string(buffer.size()));
    }

    std::vector<SampleId> chosen;
    if (method == InitMethod::random) {
        Rng rng(seed);
        for (std::size_t pos : rng.sample_without_replacement(buffer.size(), n_init)) {
            chosen.push_back(buffer[pos].id);
        }
    } else {
        for (const auto& s : spacefill_pick(buffer, n_init)) chosen.push_back(s.id);
    }

    // Training keeps source order.
    std::unordered_set<SampleId> pick(chosen.begin(), chosen.end());
    std::vector<Sample> training;
    std::vector<Sample> rest;
    for (const auto& s : buffer) (pick.count(s.id) ? training : rest).push_back(s);
    return with_sets(partition, SampleSet(std::move(training), "training"), SampleSet(std::move(rest), "buffer"));
}

Partition move_samples(const Partition& partition, std::span<const SampleId> ids) {
    std::unordered_set<SampleId> pick;
    for (SampleId id : ids) {
        if (!partition.buffer.contains(id)) {
            throw MembershipError("cannot move sample id " + std::to_string(id) + ": not in buffer");
        }
        if (!pick.insert(id).second) {
            throw MembershipError("sample id " + std::to_string(id) + " listed twice");
        }
    }
    if (ids.empty()) return partition;

    std::vector<Sample> training = partition.training.samples();
    for (SampleId id : ids) training.push_back(partition.buffer.at_id(id));
    std::vector<Sample> rest;
    for (const auto& s : partition.buffer) {
        if (!pick.count(s.id)) rest.push_back(s);
    }
    return with_sets(partition, SampleSet(std::move(training), "training"), SampleSet(std::move(rest), "buffer"));
}

}  // namespace nnal
