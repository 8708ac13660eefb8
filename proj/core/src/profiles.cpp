#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "bicsignal/dataset.hpp"

namespace bicsignal {

std::uint64_t ProfileTable::n() const noexcept {
    return std::accumulate(weights.begin(), weights.end(), std::uint64_t{0});
}

namespace {

// Key layout: bit t (t < k) is the t-th selected covariate, bit k the outcome.
// Keys span `words` 64-bit words, least significant word first.
void emit(ProfileTable& pt, std::span<const std::uint64_t> key, std::size_t k, std::uint64_t weight) {
    for (std::size_t t = 0; t < k; ++t)
        pt.covariates.push_back(static_cast<std::uint8_t>((key[t / 64] >> (t % 64)) & 1U));
    pt.outcomes.push_back(static_cast<std::uint8_t>((key[k / 64] >> (k % 64)) & 1U));
    pt.weights.push_back(weight);
}

bool key_less(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
    for (std::size_t w = a.size(); w-- > 0;)
        if (a[w] != b[w]) return a[w] < b[w];
    return false;
}

}  // namespace

ProfileTable compress_profiles(const EventData& data, std::span<const std::uint32_t> selected) {
    const std::size_t n = data.n();
    const std::size_t k = selected.size();
    const std::size_t words = (k + 1 + 63) / 64;
    const auto y = data.outcomes();

    for (auto s : selected)
        if (s >= data.width()) throw std::out_of_range("compress_profiles: column index out of range");

    // Only reports taking at least one selected drug get a nonzero covariate
    // pattern; the rest collapse onto the two all-zero profiles.
    std::vector<std::uint64_t> keys(n * words, 0);
    std::vector<std::uint32_t> touched;
    std::vector<bool> is_touched(n, false);
    for (std::size_t t = 0; t < k; ++t) {
        for (auto i : data.column(selected[t])) {
            keys[i * words + t / 64] |= std::uint64_t{1} << (t % 64);
            if (!is_touched[i]) {
                is_touched[i] = true;
                touched.push_back(i);
            }
        }
    }
    std::size_t touched_pos = 0;
    for (auto i : touched) {
        if (y[i]) {
            keys[i * words + k / 64] |= std::uint64_t{1} << (k % 64);
            ++touched_pos;
        }
    }
    const std::uint64_t zero_pos = data.positives() - touched_pos;
    const std::uint64_t zero_neg = (n - touched.size()) - zero_pos;

    ProfileTable pt;
    pt.width = k;
    std::vector<std::uint64_t> zero_key(words, 0);
    if (zero_neg > 0) emit(pt, zero_key, k, zero_neg);

    auto key_of = [&](std::uint32_t i) { return std::span<const std::uint64_t>(keys).subspan(i * words, words); };
    std::sort(touched.begin(), touched.end(),
              [&](std::uint32_t a, std::uint32_t b) { return key_less(key_of(a), key_of(b)); });

    // Merge the all-zero positive profile into key order.
    zero_key[k / 64] |= std::uint64_t{1} << (k % 64);
    bool zero_pos_done = zero_pos == 0;

    for (std::size_t a = 0; a < touched.size();) {
        std::size_t b = a + 1;
        while (b < touched.size() && !key_less(key_of(touched[a]), key_of(touched[b]))) ++b;
        if (!zero_pos_done && key_less(zero_key, key_of(touched[a]))) {
            emit(pt, zero_key, k, zero_pos);
            zero_pos_done = true;
        }
        emit(pt, key_of(touched[a]), k, b - a);
        a = b;
    }
    if (!zero_pos_done) emit(pt, zero_key, k, zero_pos);
    return pt;
}

ProfileTable compress_profiles(const ReportMatrix& x, const EventVector& y,
                               std::span<const std::uint32_t> drugs) {
    EventData data(x, y, drugs);
    std::vector<std::uint32_t> all(drugs.size());
    std::iota(all.begin(), all.end(), 0U);
    return compress_profiles(data, all);
}

}  // namespace bicsignal
