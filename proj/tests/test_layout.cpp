#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "otfs/layout.hpp"

using namespace otfs;

namespace {

std::size_t count_kind(const FrameLayout& lay, CellKind kind) {
    std::size_t count = 0;
    for (CellKind k : lay.kinds())
        if (k == kind) ++count;
    return count;
}

}  // namespace

TEST_CASE("worked pilot+guard totals per scheme") {
    const GridDims dims(128, 512);

    auto siso = build_layout(Scheme::SisoInteger, dims, {-1, -1}, 20, 4);
    CHECK(overhead_count(siso) == 697);
    CHECK(count_kind(siso, CellKind::Guard) == 696);
    CHECK(overhead_count(siso) * 100.0 / dims.cells() < 1.1);  // about one percent

    auto full = build_layout(Scheme::SisoFracFull, dims, {-1, -1}, 20, 4);
    CHECK(overhead_count(full) == 5248);
    CHECK(overhead_count(full) * 100.0 / dims.cells() == Catch::Approx(8.0).margin(0.05));

    auto red5 = build_layout(Scheme::SisoFracReduced, dims, {-1, -1}, 20, 4, 5);
    CHECK(overhead_count(red5) == 1517);
    auto red2 = build_layout(Scheme::SisoFracReduced, dims, {-1, -1}, 20, 4, 2);
    CHECK(overhead_count(red2) == 1025);

    auto mimo = build_layout(Scheme::Mimo, dims, {-1, -1}, 20, 4, 0, 3);
    CHECK(overhead_count(mimo) == 1411);

    auto uplink = build_layout(Scheme::MultiUserUplink, dims, {-1, -1}, 20, 4, 0, 3);
    CHECK(overhead_count(uplink) == 1411);

    auto downlink = build_layout(Scheme::MultiUserDownlink, dims, {-1, -1}, 20, 4, 2, 3);
    CHECK(overhead_count(downlink) == 1025);
}

TEST_CASE("closed forms hold over randomized valid parameters") {
    Rng rng(42);
    for (int rep = 0; rep < 200; ++rep) {
        const int l_tau = 1 + static_cast<int>(rng.next_u64() % 6);
        const int k_nu = 1 + static_cast<int>(rng.next_u64() % 3);
        const int k_hat = static_cast<int>(rng.next_u64() % 3);
        const int streams = 1 + static_cast<int>(rng.next_u64() % 3);
        const GridDims dims(8 * (k_nu + k_hat) + 4, (streams + 2) * (l_tau + 2) * 4);
        const Scheme schemes[] = {Scheme::SisoInteger,     Scheme::SisoFracFull,
                                  Scheme::SisoFracReduced, Scheme::Mimo,
                                  Scheme::MultiUserUplink, Scheme::MultiUserDownlink};
        const Scheme s = schemes[rng.next_u64() % 6];
        const auto lay = build_layout(s, dims, {-1, -1}, l_tau, k_nu, k_hat, streams);
        const int used_hat = (s == Scheme::SisoInteger || s == Scheme::SisoFracFull) ? 0 : k_hat;
        CHECK(overhead_count(lay) ==
              overhead_closed_form(s, dims.n, l_tau, k_nu, used_hat, lay.n_streams));
        // Pilot, guard, data partition the grid.
        CHECK(count_kind(lay, CellKind::Pilot) == lay.pilots.size());
        CHECK(count_kind(lay, CellKind::Pilot) + count_kind(lay, CellKind::Guard) +
                  count_kind(lay, CellKind::Data) ==
              dims.cells());
        // est regions and det region partition the grid.
        std::set<std::size_t> seen;
        for (const auto& region : lay.est_regions())
            for (std::size_t f : region) CHECK(seen.insert(f).second);
        for (std::size_t f : lay.det_region()) CHECK(seen.insert(f).second);
        CHECK(seen.size() == dims.cells());
        // No data cell lies inside any estimation region.
        for (const auto& region : lay.est_regions())
            for (std::size_t f : region) CHECK(lay.kind_at(f) != CellKind::Data);
    }
}

TEST_CASE("region shapes for the SISO schemes") {
    const GridDims dims(128, 512);
    auto siso = build_layout(Scheme::SisoInteger, dims, {-1, -1}, 20, 4);
    CHECK(siso.est_region(0).size() == 9 * 21);
    CHECK(siso.det_region().size() == dims.cells() - 9 * 21);

    auto full = build_layout(Scheme::SisoFracFull, dims, {-1, -1}, 20, 4);
    CHECK(full.est_region(0).size() == 128 * 21);

    auto red = build_layout(Scheme::SisoFracReduced, dims, {-1, -1}, 20, 4, 5);
    CHECK(red.est_region(0).size() == (2 * (4 + 5) + 1) * 21);
}

TEST_CASE("MIMO pilots are separated and estimation regions disjoint") {
    const GridDims dims(64, 256);
    auto lay = build_layout(Scheme::Mimo, dims, {-1, -1}, 10, 2, 0, 3);
    REQUIRE(lay.pilots.size() == 3);
    for (std::size_t i = 0; i + 1 < lay.pilots.size(); ++i)
        CHECK(lay.pilots[i + 1].second - lay.pilots[i].second == lay.l_tau + 1);
    for (std::size_t s = 0; s < 3; ++s) CHECK(lay.est_region(static_cast<int>(s)).size() == 5 * 11);
    // MIMO streams share the data mask.
    CHECK(lay.data_count(0) == lay.data_count(2));
}

TEST_CASE("uplink bands partition the data cells, downlink separators are guards") {
    const GridDims dims(32, 64);
    auto up = build_layout(Scheme::MultiUserUplink, dims, {-1, -1}, 4, 1, 0, 3);
    std::size_t total = 0;
    std::set<std::size_t> seen;
    for (int u = 0; u < 3; ++u) {
        total += up.data_count(u);
        for (std::size_t f : up.data_cells(u)) CHECK(seen.insert(f).second);
    }
    CHECK(total == count_kind(up, CellKind::Data));

    auto down = build_layout(Scheme::MultiUserDownlink, dims, {-1, -1}, 4, 1, 1, 2);
    CHECK(down.downlink_guard_cols == 4);  // defaults to l_tau
    std::size_t down_total = 0;
    for (int u = 0; u < 2; ++u) down_total += down.data_count(u);
    CHECK(down_total == count_kind(down, CellKind::Data));
    // Separator columns cost data beyond the pilot block.
    CHECK(down_total + overhead_count(down) < dims.cells());
}

TEST_CASE("per-user uplink frames compose without overlap") {
    const GridDims dims(32, 64);
    const auto lay = build_layout(Scheme::MultiUserUplink, dims, {-1, -1}, 4, 1, 0, 3);
    Rng rng(13);
    DDFrame sum(dims);
    for (int u = 0; u < 3; ++u) {
        std::vector<cplx> data(lay.data_count(u));
        for (cplx& d : data) d = rng.complex_gaussian(1.0) + cplx{3.0, 3.0};  // never zero
        const DDFrame frame = place_symbols(lay, cplx{2.0, 0.0}, data, u);
        CHECK(extract_data(lay, frame, u) == data);
        // A user's frame is silent outside its own pilot and data band.
        for (std::size_t f = 0; f < frame.size(); ++f)
            if (frame.cells()[f] != cplx{}) {
                const bool own_pilot = f == lay.index(lay.pilot_k(u), lay.pilot_l(u));
                const bool own_data =
                    std::binary_search(lay.data_cells(u).begin(), lay.data_cells(u).end(), f);
                CHECK((own_pilot || own_data));
            }
        for (std::size_t i = 0; i < sum.size(); ++i) sum.cells()[i] += frame.cells()[i];
    }
    // Superposing all users occupies every data cell exactly once and keeps
    // the guard block silent apart from the three pilots.
    std::size_t occupied = 0, pilots = 0;
    for (std::size_t f = 0; f < sum.size(); ++f) {
        if (sum.cells()[f] == cplx{}) continue;
        if (lay.kind_at(f) == CellKind::Pilot)
            ++pilots;
        else {
            CHECK(lay.kind_at(f) == CellKind::Data);
            ++occupied;
        }
    }
    CHECK(pilots == 3);
    CHECK(occupied == count_kind(lay, CellKind::Data));
}

TEST_CASE("data cell count example on the small grid") {
    const GridDims dims(8, 8);
    auto lay = build_layout(Scheme::SisoInteger, dims, {-1, -1}, 1, 1);
    CHECK(lay.data_count(0) == 64 - 15);
}

TEST_CASE("place and extract round trip, deterministic fill") {
    const GridDims dims(16, 24);
    auto lay = build_layout(Scheme::SisoInteger, dims, {-1, -1}, 3, 1);
    Rng rng(7);
    std::vector<cplx> data(lay.data_count(0));
    for (auto& d : data) d = rng.complex_gaussian(1.0);
    const DDFrame frame = place_symbols(lay, cplx{2.0, 0.0}, data);
    CHECK(frame.at(lay.pilot_k(0), lay.pilot_l(0)) == cplx{2.0, 0.0});
    CHECK(extract_data(lay, frame) == data);

    // Zero data plus unit pilot leaves exactly one nonzero cell.
    const DDFrame only_pilot =
        place_symbols(lay, cplx{1.0, 0.0}, std::vector<cplx>(lay.data_count(0), cplx{}));
    std::size_t nonzero = 0;
    for (const cplx& c : only_pilot.cells())
        if (c != cplx{}) ++nonzero;
    CHECK(nonzero == 1);

    CHECK_THROWS_AS(place_symbols(lay, cplx{1.0, 0.0}, std::vector<cplx>(3)),
                    std::invalid_argument);
}

TEST_CASE("split_rx partitions every cell once") {
    const GridDims dims(16, 24);
    auto lay = build_layout(Scheme::SisoFracReduced, dims, {-1, -1}, 3, 1, 2);
    DDFrame rx(dims);
    Rng rng(9);
    for (auto& c : rx.cells()) c = rng.complex_gaussian(1.0);
    const SplitRx split = split_rx(lay, rx);
    CHECK(split.est[0].size() + split.det.size() == dims.cells());
    double sum_split = 0.0, sum_frame = 0.0;
    for (const cplx& c : split.est[0]) sum_split += std::norm(c);
    for (const cplx& c : split.det) sum_split += std::norm(c);
    for (const cplx& c : rx.cells()) sum_frame += std::norm(c);
    CHECK(sum_split == Catch::Approx(sum_frame));

    DDFrame bad(GridDims(8, 8));
    CHECK_THROWS_AS(split_rx(lay, bad), std::invalid_argument);
}

TEST_CASE("bound violations name the failing inequality") {
    const GridDims dims(16, 16);
    CHECK_THROWS_WITH(build_layout(Scheme::SisoInteger, dims, {8, 2}, 4, 1),
                      Catch::Matchers::ContainsSubstring("l_p - l_tau"));
    CHECK_THROWS_WITH(build_layout(Scheme::SisoInteger, dims, {8, 14}, 4, 1),
                      Catch::Matchers::ContainsSubstring("l_p + l_tau"));
    CHECK_THROWS_WITH(build_layout(Scheme::SisoInteger, dims, {1, 8}, 4, 1),
                      Catch::Matchers::ContainsSubstring("k_p - 2*(k_nu + k_hat)"));
    CHECK_THROWS_WITH(build_layout(Scheme::SisoInteger, dims, {15, 8}, 4, 1),
                      Catch::Matchers::ContainsSubstring("k_p + 2*(k_nu + k_hat)"));
    CHECK_THROWS_WITH(build_layout(Scheme::Mimo, dims, {-1, -1}, 4, 1, 0, 4),
                      Catch::Matchers::ContainsSubstring("(n_streams+1)*l_tau + n_streams"));
}

TEST_CASE("summary line carries the overhead") {
    const GridDims dims(128, 512);
    auto lay = build_layout(Scheme::SisoInteger, dims, {-1, -1}, 20, 4);
    const std::string s = format_summary(lay);
    CHECK(s.find("siso_integer") != std::string::npos);
    CHECK(s.find("697") != std::string::npos);
}
