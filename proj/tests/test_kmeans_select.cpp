#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "pbo/kmeans.hpp"
#include "pbo/select.hpp"

using namespace pbo;

namespace {

std::vector<Eigen::VectorXd> points1d(const std::vector<double>& vs) {
    std::vector<Eigen::VectorXd> out;
    for (double v : vs) {
        Eigen::VectorXd x(1);
        x << v;
        out.push_back(x);
    }
    return out;
}

// exhaustive assignment enumeration: optimal k-means inertia on tiny sets
double best_partition_inertia(const std::vector<Eigen::VectorXd>& pts, int k) {
    const int m = static_cast<int>(pts.size());
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> assign(m, 0);
    const auto eval = [&]() {
        double total = 0.0;
        for (int c = 0; c < k; ++c) {
            Eigen::VectorXd mean = Eigen::VectorXd::Zero(pts[0].size());
            int count = 0;
            for (int i = 0; i < m; ++i)
                if (assign[i] == c) {
                    mean += pts[i];
                    ++count;
                }
            if (count == 0) continue;
            mean /= count;
            for (int i = 0; i < m; ++i)
                if (assign[i] == c) total += (pts[i] - mean).squaredNorm();
        }
        return total;
    };
    while (true) {
        best = std::min(best, eval());
        int c = 0;
        while (c < m && ++assign[c] == k) assign[c++] = 0;
        if (c == m) break;
    }
    return best;
}

moo::Population pop_from_points(const std::vector<Eigen::VectorXd>& xs,
                                const std::vector<std::array<double, 2>>& fs) {
    moo::Population pop;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        moo::Individual ind;
        ind.x = xs[i];
        ind.f = fs[i];
        pop.push_back(ind);
    }
    moo::rank_and_crowd(pop);
    return pop;
}

}  // namespace

TEST_CASE("kmeans basics", "[kmeans]") {
    // k equal to the sample count: centers are the samples, inertia zero
    const auto pts = points1d({0.0, 1.0, 10.0});
    const auto km = kmeans(pts, 3, 1);
    REQUIRE(km.inertia == Catch::Approx(0.0).margin(1e-18));
    std::vector<double> centers{km.centers(0, 0), km.centers(1, 0), km.centers(2, 0)};
    std::sort(centers.begin(), centers.end());
    REQUIRE(centers[0] == 0.0);
    REQUIRE(centers[1] == 1.0);
    REQUIRE(centers[2] == 10.0);

    // the frozen two-cluster split of {0, 1, 10, 11}
    const auto km2 = kmeans(points1d({0.0, 1.0, 10.0, 11.0}), 2, 3);
    REQUIRE(km2.inertia == Catch::Approx(1.0).margin(1e-12));
    std::vector<double> c2{km2.centers(0, 0), km2.centers(1, 0)};
    std::sort(c2.begin(), c2.end());
    REQUIRE(c2[0] == Catch::Approx(0.5));
    REQUIRE(c2[1] == Catch::Approx(10.5));
    REQUIRE(km2.inertia ==
            Catch::Approx(best_partition_inertia(points1d({0, 1, 10, 11}), 2)));

    // duplicating every sample leaves the optimal centers unchanged
    const auto doubled = kmeans(points1d({0, 1, 10, 11, 0, 1, 10, 11}), 2, 3);
    std::vector<double> cd{doubled.centers(0, 0), doubled.centers(1, 0)};
    std::sort(cd.begin(), cd.end());
    REQUIRE(cd[0] == Catch::Approx(0.5));
    REQUIRE(cd[1] == Catch::Approx(10.5));

    REQUIRE_THROWS_AS(kmeans(points1d({1.0}), 2, 0), InputError);

    // assignments point at the nearest center and inertia is their sum
    Rng rng(5);
    std::vector<Eigen::VectorXd> cloud;
    for (int i = 0; i < 30; ++i) {
        Eigen::VectorXd x(2);
        x << rng.u01(), rng.u01();
        cloud.push_back(x);
    }
    const auto km3 = kmeans(cloud, 4, 11);
    double total = 0.0;
    for (int i = 0; i < 30; ++i) {
        double nearest = std::numeric_limits<double>::infinity();
        for (int c = 0; c < 4; ++c)
            nearest = std::min(
                nearest, (cloud[i] - km3.centers.row(c).transpose()).squaredNorm());
        const double assigned =
            (cloud[i] - km3.centers.row(km3.assignments[i]).transpose())
                .squaredNorm();
        REQUIRE(assigned <= nearest + 1e-12);
        total += assigned;
    }
    REQUIRE(km3.inertia == Catch::Approx(total).epsilon(1e-9));

    const auto again = kmeans(cloud, 4, 11);
    REQUIRE(again.centers == km3.centers);  // fixed-seed determinism
}

TEST_CASE("kmeans attains the exhaustive-partition optimum", "[kmeans]") {
    Rng rng(2718);
    for (int trial = 0; trial < 40; ++trial) {
        const int m = 3 + static_cast<int>(rng.index(6));  // up to 8 points
        const int k = 2 + static_cast<int>(rng.index(2));  // 2 or 3 clusters
        if (k > m) continue;
        std::vector<Eigen::VectorXd> pts;
        for (int i = 0; i < m; ++i) {
            Eigen::VectorXd x(2);
            x << rng.uniform(-1, 1), rng.uniform(-1, 1);
            pts.push_back(x);
        }
        const auto km = kmeans(pts, k, trial);
        REQUIRE(km.inertia ==
                Catch::Approx(best_partition_inertia(pts, k)).margin(1e-9));
    }
}

TEST_CASE("variable-space batch selection", "[select]") {
    const auto box = BoxDomain::cube(2, 0.0, 11.0);

    // exactly q distinct rank-0 points: the points themselves come back
    std::vector<Eigen::VectorXd> xs;
    Eigen::VectorXd v(2);
    v << 1.0, 2.0;
    xs.push_back(v);
    v << 9.0, 3.0;
    xs.push_back(v);
    const auto p2 = pop_from_points(xs, {{0, 1}, {1, 0}});
    const auto sel = select::select_batch_X(p2, 2, box, 5);
    std::vector<double> first{sel.points(0, 0), sel.points(1, 0)};
    std::sort(first.begin(), first.end());
    REQUIRE(first[0] == Catch::Approx(1.0));
    REQUIRE(first[1] == Catch::Approx(9.0));

    // the two-cluster rectangle: centers are the cluster midpoints
    std::vector<Eigen::VectorXd> quad;
    for (auto [a, b] : {std::pair{0.0, 0.0}, {0.0, 1.0}, {10.0, 0.0}, {10.0, 1.0}}) {
        Eigen::VectorXd x(2);
        x << a, b;
        quad.push_back(x);
    }
    const auto p4 = pop_from_points(quad, {{0, 3}, {1, 2}, {2, 1}, {3, 0}});
    const auto s4 = select::select_batch_X(p4, 2, box, 7);
    std::vector<std::pair<double, double>> got{
        {s4.points(0, 0), s4.points(0, 1)}, {s4.points(1, 0), s4.points(1, 1)}};
    std::sort(got.begin(), got.end());
    REQUIRE(got[0].first == Catch::Approx(0.0));
    REQUIRE(got[0].second == Catch::Approx(0.5));
    REQUIRE(got[1].first == Catch::Approx(10.0));
    REQUIRE(got[1].second == Catch::Approx(0.5));

    for (int i = 0; i < 2; ++i) REQUIRE(box.contains(s4.points.row(i)));

    // degenerate population: pads with logged uniform points, all distinct
    EventLog log;
    const auto tiny = pop_from_points({quad[0]}, {{0, 0}});
    const auto padded = select::select_batch_X(tiny, 3, box, 9, &log);
    REQUIRE(padded.points.rows() == 3);
    REQUIRE_FALSE(log.empty());
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            REQUIRE((padded.points.row(i) - padded.points.row(j))
                        .lpNorm<Eigen::Infinity>() > 1e-12);
}

TEST_CASE("objective-space batch selection", "[select]") {
    const auto box = BoxDomain::cube(2, -5.0, 5.0);
    std::vector<Eigen::VectorXd> xs;
    std::vector<std::array<double, 2>> fs;
    // two well-separated objective clusters
    Rng rng(3);
    for (int i = 0; i < 6; ++i) {
        Eigen::VectorXd x(2);
        x << rng.uniform(-5, 5), rng.uniform(-5, 5);
        xs.push_back(x);
        const double eps = 0.01 * i;
        if (i < 3) fs.push_back({0.0 + eps, 10.0 - eps});
        else fs.push_back({10.0 - eps, 0.0 + eps});
    }
    const auto pop = pop_from_points(xs, fs);
    const auto sel = select::select_batch_F(pop, 2, box, 4);
    REQUIRE(sel.points.rows() == 2);
    REQUIRE(sel.member_indices.size() == 2);
    // one member per cluster, and returned points are population members
    const bool split = (sel.member_indices[0] < 3) != (sel.member_indices[1] < 3);
    REQUIRE(split);
    for (int i = 0; i < 2; ++i) {
        bool found = false;
        for (const auto& x : xs)
            if ((x - sel.points.row(i).transpose()).norm() < 1e-12) found = true;
        REQUIRE(found);
    }

    // q equal to the number of distinct objective pairs selects all of them
    std::vector<Eigen::VectorXd> three{xs[0], xs[1], xs[2]};
    const auto p3 = pop_from_points(three, {{0, 2}, {1, 1}, {2, 0}});
    const auto s3 = select::select_batch_F(p3, 3, box, 8);
    REQUIRE(s3.member_indices.size() == 3);
    std::vector<int> sorted = s3.member_indices;
    std::sort(sorted.begin(), sorted.end());
    REQUIRE(sorted == std::vector<int>{0, 1, 2});
}

TEST_CASE("batch selection determinism", "[select]") {
    const auto box = BoxDomain::cube(3, 0.0, 1.0);
    Rng rng(17);
    std::vector<Eigen::VectorXd> xs;
    std::vector<std::array<double, 2>> fs;
    for (int i = 0; i < 25; ++i) {
        xs.push_back(sample_uniform_one(box, rng));
        fs.push_back({rng.u01(), rng.u01()});
    }
    const auto pop = pop_from_points(xs, fs);
    const auto a = select::select_batch_X(pop, 4, box, 21);
    const auto b = select::select_batch_X(pop, 4, box, 21);
    REQUIRE(a.points == b.points);
    const auto c = select::select_batch_F(pop, 4, box, 21);
    const auto d = select::select_batch_F(pop, 4, box, 21);
    REQUIRE(c.points == d.points);
}
