#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nnal/random.hpp"

namespace nnal {

inline constexpr std::size_t kSpectrumChannels = 100;

using SampleId = long;

/// One NIR spectrum with its measured constituents. Fat is the modeled response.
struct Sample {
    SampleId id = 0;
    std::vector<double> spectrum;  // absorbance, log10(1/T)
    double fat = 0.0;              // percent
    std::optional<double> moisture;
    std::optional<double> protein;

    bool operator==(const Sample&) const = default;
};

/// Throws ParseError unless the spectrum has kSpectrumChannels finite values and fat is in [0, 100].
void validate_sample(const Sample& sample);

/// Ordered samples with unique ids.
class SampleSet {
public:
    SampleSet() = default;
    SampleSet(std::vector<Sample> samples, std::string provenance);

    const std::vector<Sample>& samples() const noexcept { return samples_; }
    const std::string& provenance() const noexcept { return provenance_; }
    std::size_t size() const noexcept { return samples_.size(); }
    bool empty() const noexcept { return samples_.empty(); }
    const Sample& operator[](std::size_t i) const { return samples_[i]; }

    auto begin() const noexcept { return samples_.begin(); }
    auto end() const noexcept { return samples_.end(); }

    bool contains(SampleId id) const noexcept;
    /// Throws MembershipError when absent.
    const Sample& at_id(SampleId id) const;

    std::vector<SampleId> ids() const;
    std::vector<double> fats() const;

    bool operator==(const SampleSet&) const = default;

private:
    std::vector<Sample> samples_;
    std::string provenance_;
};

/// Validation (never trained on), current training set, and remaining pool.
struct Partition {
    SampleSet validation;
    SampleSet training;
    SampleSet buffer;
    std::size_t source_size = 0;

    /// Throws StateError if the sets overlap or the total count changed.
    void check_invariants() const;

    bool operator==(const Partition&) const = default;
};

enum class InitMethod { random, spacefill };

InitMethod parse_init_method(const std::string& text);
std::string to_string(InitMethod method);

/// Reads the `id,ch000..ch099,moisture,fat,protein` CSV layout.
/// Ids are reassigned 0..n-1 in row order; the id column is read but not trusted.
SampleSet load_samples(std::istream& in);
SampleSet load_samples(const std::filesystem::path& path);

/// Writes values with round-trip precision.
void write_samples(std::ostream& out, const SampleSet& set);

/// Splits off `val_size` samples drawn uniformly without replacement. Both
/// resulting sets keep source order; training starts empty.
Partition split_validation(const SampleSet& set, std::size_t val_size, Seed seed);

/// Moves `n_init` buffer samples into the (empty) training set.
///
/// spacefill bins the buffer's fat range into ten equal-width bins and visits
/// them round-robin, each time taking the unchosen sample closest to the bin
/// center (lower id on ties). The seed is unused for spacefill.
Partition draw_initial(const Partition& partition, std::size_t n_init, InitMethod method, Seed seed);

/// Moves the listed ids from buffer to training (appended in list order).
/// All-or-nothing: throws MembershipError before touching anything.
Partition move_samples(const Partition& partition, std::span<const SampleId> ids);

}  // namespace nnal
