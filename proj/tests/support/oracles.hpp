#pragma once

// Independent reference implementations used as test oracles.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "storyline/grouping.hpp"
#include "storyline/layout.hpp"

namespace storyline::testkit {

// Reference DBSCAN: explicit neighbourhoods over all pairs, region growing
// from each unvisited core point. Returns a cluster label per input point.
inline std::vector<int> brute_force_dbscan(const std::vector<double>& x, double eps, std::size_t min_pts) {
    const std::size_t n = x.size();
    std::vector<std::vector<std::size_t>> neighbours(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (std::fabs(x[i] - x[j]) <= eps) neighbours[i].push_back(j);

    std::vector<int> label(n, -1);
    int next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (label[i] != -1 || neighbours[i].size() < min_pts) continue;
        label[i] = next;
        std::vector<std::size_t> frontier = {i};
        while (!frontier.empty()) {
            const std::size_t p = frontier.back();
            frontier.pop_back();
            if (neighbours[p].size() < min_pts) continue;
            for (std::size_t q : neighbours[p]) {
                if (label[q] != -1) continue;
                label[q] = next;
                frontier.push_back(q);
            }
        }
        ++next;
    }
    return label;
}

// Partition of point indices as a set of sets, independent of labelling.
inline std::set<std::set<std::size_t>> partition_of(const std::vector<int>& label) {
    std::map<int, std::set<std::size_t>> by;
    for (std::size_t i = 0; i < label.size(); ++i) by[label[i]].insert(i);
    std::set<std::set<std::size_t>> out;
    for (auto& [_, s] : by) out.insert(s);
    return out;
}

inline std::set<std::set<std::size_t>> oracle_partition(const std::vector<CalendarDate>& dates) {
    long lo = to_day_number(dates.front()), hi = lo;
    for (auto d : dates) {
        lo = std::min(lo, to_day_number(d));
        hi = std::max(hi, to_day_number(d));
    }
    std::vector<double> x;
    for (auto d : dates) x.push_back(normalized_position(to_day_number(d), lo, hi));
    const double span_years = static_cast<double>(hi - lo) / 365.25;
    const double eps = span_years == 0 ? 30.0 : std::min(30.0, 2.5 / span_years * 100.0);
    return partition_of(brute_force_dbscan(x, eps, 1));
}

inline std::set<std::set<std::size_t>> cluster_partition(const std::vector<CalendarDate>& dates) {
    std::vector<DatedValue> dated;
    for (std::size_t i = 0; i < dates.size(); ++i) dated.push_back({std::to_string(i), EventEnd::Start, dates[i]});
    std::set<std::set<std::size_t>> out;
    for (const auto& c : cluster_dates(dated)) {
        std::set<std::size_t> s;
        for (const auto& v : c.values) s.insert(std::stoul(v.event_id));
        out.insert(s);
    }
    return out;
}

// Reference first-fit: same processing order, but a lane is accepted only
// after checking the new item against every item already placed in it.
inline std::vector<std::size_t> brute_force_first_fit(const std::vector<PackItem>& items, double padding) {
    std::vector<std::size_t> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::tie(items[a].left, items[a].order, a) < std::tie(items[b].left, items[b].order, b);
    });
    std::vector<std::vector<std::size_t>> lanes;
    std::vector<std::size_t> lane_of(items.size());
    for (std::size_t i : order) {
        std::size_t lane = 0;
        for (; lane < lanes.size(); ++lane) {
            bool fits = true;
            for (std::size_t j : lanes[lane]) {
                const bool separated =
                    items[j].right + padding <= items[i].left || items[i].right + padding <= items[j].left;
                if (!separated) fits = false;
            }
            if (fits) break;
        }
        if (lane == lanes.size()) lanes.emplace_back();
        lanes[lane].push_back(i);
        lane_of[i] = lane;
    }
    return lane_of;
}

}  // namespace storyline::testkit
