#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "higs/pipeline.hpp"
#include "higs/random.hpp"

namespace higs::procedural {

struct CatalogEntry {
    std::string_view category;
    Vec3 extents;  ///< full size; x is depth along the forward axis
    bool surface;  ///< can carry small objects on its top face
    bool small;    ///< rests on a surface when one is available
};

// clang-format off
inline constexpr CatalogEntry kCatalog[] = {
    {"bed",          {2.00, 1.60, 0.50}, true,  false},
    {"nightstand",   {0.45, 0.50, 0.55}, true,  false},
    {"desk",         {0.70, 1.40, 0.75}, true,  false},
    {"table",        {0.90, 1.60, 0.75}, true,  false},
    {"chair",        {0.50, 0.50, 0.90}, false, false},
    {"sofa",         {0.90, 2.00, 0.80}, true,  false},
    {"wardrobe",     {0.60, 1.20, 2.00}, false, false},
    {"shelf",        {0.35, 1.00, 1.80}, true,  false},
    {"tent",         {2.20, 2.00, 1.30}, false, false},
    {"sleeping bag", {2.00, 0.80, 0.15}, false, false},
    {"lamp",         {0.25, 0.25, 0.45}, false, true},
    {"book",         {0.20, 0.15, 0.04}, false, true},
    {"laptop",       {0.30, 0.35, 0.03}, false, true},
    {"mug",          {0.10, 0.10, 0.10}, false, true},
    {"plant",        {0.30, 0.30, 0.50}, false, true},
    {"vase",         {0.15, 0.15, 0.30}, false, true},
    {"candle",       {0.08, 0.08, 0.15}, false, true},
    {"lantern",      {0.15, 0.15, 0.30}, false, true},
    {"cushion",      {0.40, 0.40, 0.15}, false, true},
    {"monitor",      {0.20, 0.55, 0.40}, false, true},
    {"keyboard",     {0.15, 0.45, 0.03}, false, true},
    {"pillow",       {0.40, 0.60, 0.12}, false, true},
};
// clang-format on

inline const CatalogEntry* find_entry(std::string_view category) {
    for (const auto& e : kCatalog)
        if (e.category == category) return &e;
    return nullptr;
}

struct RoomTemplate {
    std::string_view keyword;
    std::vector<std::string_view> objects;
};

inline const std::vector<RoomTemplate>& room_templates() {
    static const std::vector<RoomTemplate> rooms = {
        {"bedroom", {"bed", "nightstand", "wardrobe", "lamp"}},
        {"office", {"desk", "chair", "shelf", "monitor"}},
        {"study", {"desk", "chair", "book"}},
        {"living room", {"sofa", "table", "plant"}},
        {"kitchen", {"table", "chair", "mug"}},
        {"campsite", {"tent", "sleeping bag", "lantern"}},
    };
    return rooms;
}

inline std::string lower_words(std::string_view text) {
    std::string out;
    for (unsigned char c : text) out += std::isalpha(c) ? static_cast<char>(std::tolower(c)) : ' ';
    return out;
}

inline std::vector<std::string> split_words(const std::string& s) {
    std::vector<std::string> words;
    std::string cur;
    for (char c : s) {
        if (c == ' ') {
            if (!cur.empty()) words.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

inline int number_word(const std::string& w) {
    static const std::map<std::string, int> nums = {{"two", 2}, {"three", 3}, {"four", 4}, {"pair", 2}};
    auto it = nums.find(w);
    return it == nums.end() ? 1 : it->second;
}

/// Keyword object lister. Explicit catalog nouns (singular or plural, one or
/// two words, optionally preceded by a count word) win; if none occur, a room
/// keyword expands to its template. Order follows first mention.
inline std::vector<pipeline::ObjectSpec> list_objects(std::string_view sceneText) {
    const auto words = split_words(lower_words(sceneText));
    std::vector<pipeline::ObjectSpec> out;
    auto add = [&](std::string_view cat, int count) {
        for (auto& s : out) {
            if (s.category == cat) {
                s.count += count;
                return;
            }
        }
        out.push_back({std::string(cat), find_entry(cat)->extents, count});
    };
    auto singular = [](std::string w) {
        if (w.size() > 3 && w.ends_with("es") && find_entry(w.substr(0, w.size() - 2))) return w.substr(0, w.size() - 2);
        if (w.size() > 2 && w.ends_with("s") && find_entry(w.substr(0, w.size() - 1))) return w.substr(0, w.size() - 1);
        return w;
    };
    for (std::size_t i = 0; i < words.size(); ++i) {
        const int count = i > 0 ? number_word(words[i - 1]) : 1;
        if (i + 1 < words.size()) {
            const std::string two = words[i] + " " + singular(words[i + 1]);
            if (find_entry(two)) {
                add(find_entry(two)->category, count);
                ++i;
                continue;
            }
        }
        const std::string w = singular(words[i]);
        if (const auto* e = find_entry(w)) add(e->category, count);
    }
    if (!out.empty()) return out;

    const std::string joined = " " + lower_words(sceneText) + " ";
    for (const auto& room : room_templates()) {
        if (joined.find(" " + std::string(room.keyword)) != std::string::npos) {
            for (auto cat : room.objects) add(cat, 1);
            break;
        }
    }
    return out;
}

inline std::string describe_objects(const std::vector<pipeline::ObjectSpec>& objs) {
    std::string out = "a scene containing ";
    for (std::size_t i = 0; i < objs.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(objs[i].count) + " " + objs[i].category;
    }
    return objs.empty() ? "an empty scene" : out;
}

inline std::string image_handle(const std::string& prompt, std::uint64_t seed) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(prompt, mix_seed(seed, 0x1d))));
    return std::string("img:") + buf;
}

inline constexpr double kMaxYawJitter = deg_to_rad(10.0);
inline constexpr double kMaxOffSurface = 0.3;

/// Synthesizes perceived objects in the local frame with deliberate flaws:
/// yaws up to 10 degrees off the axis family, small objects nudged up to
/// 0.3 m past their supporter's edge (the first one always), everything
/// hovering a few centimetres above its support.
inline std::vector<pipeline::PerceivedObject> reconstruct(const std::string& handle,
                                                          const std::vector<pipeline::ObjectSpec>& specs,
                                                          const pipeline::StepContext& ctx) {
    Rng rng(mix_seed(ctx.seed, fnv1a64(handle)));
    std::vector<pipeline::PerceivedObject> out;
    struct Pending {
        const CatalogEntry* entry;
        std::string category;
        Vec3 half;
    };
    std::vector<Pending> large, small;
    for (const auto& s : specs) {
        const CatalogEntry* e = find_entry(s.category);
        const bool isSmall = e ? e->small : false;
        for (int k = 0; k < s.count; ++k)
            (isSmall ? small : large).push_back({e, s.category, s.approxExtents * 0.5});
    }

    auto jittered_yaw = [&] {
        return static_cast<double>(rng.index(4)) * (kPi / 2.0) + rng.uniform(-kMaxYawJitter, kMaxYawJitter);
    };

    // Large objects on a grid around the origin.
    double cell = 0.0;
    for (const auto& p : large) cell = std::max(cell, 2.0 * std::hypot(p.half.x, p.half.y) * 1.1 + 0.4);
    const std::size_t cols = large.empty() ? 1 : static_cast<std::size_t>(std::ceil(std::sqrt(double(large.size()))));
    const std::size_t rows = large.empty() ? 0 : (large.size() + cols - 1) / cols;
    std::vector<std::size_t> surfaces;
    for (std::size_t i = 0; i < large.size(); ++i) {
        const auto& p = large[i];
        const double scale = rng.uniform(0.9, 1.1);
        const double cx = (static_cast<double>(i % cols) - (cols - 1) / 2.0) * cell;
        const double cy = (static_cast<double>(i / cols) - (rows - 1) / 2.0) * cell;
        pipeline::PerceivedObject o;
        o.category = p.category;
        o.halfExtents = p.half;
        o.scale = scale;
        o.yaw = jittered_yaw();
        o.pos = {cx + rng.uniform(-0.15, 0.15), cy + rng.uniform(-0.15, 0.15), p.half.z * scale + rng.uniform(0.0, 0.05)};
        if (p.entry && p.entry->surface) surfaces.push_back(out.size());
        out.push_back(std::move(o));
    }

    // Small objects on a random supporter, or clustered on the ground.
    bool forcedOff = false;
    std::size_t loose = 0;
    for (const auto& p : small) {
        pipeline::PerceivedObject o;
        o.category = p.category;
        o.halfExtents = p.half;
        o.scale = rng.uniform(0.9, 1.1);
        o.yaw = jittered_yaw();
        if (!surfaces.empty()) {
            const auto& host = out[surfaces[rng.index(surfaces.size())]];
            const Vec3 hh = host.halfExtents * host.scale;
            Vec2 local{rng.uniform(-0.8, 0.8) * hh.x, rng.uniform(-0.8, 0.8) * hh.y};
            if (!forcedOff || rng.chance(0.5)) {
                const double sign = rng.chance(0.5) ? 1.0 : -1.0;
                const double off = rng.uniform(0.05, kMaxOffSurface);
                if (rng.chance(0.5))
                    local.x = sign * (hh.x + off);
                else
                    local.y = sign * (hh.y + off);
                forcedOff = true;
            }
            const Vec2 w = host.pos.xy() + rotate2(local, host.yaw);
            const double top = host.pos.z + hh.z;
            o.pos = {w.x, w.y, top + p.half.z * o.scale + rng.uniform(0.0, 0.05)};
        } else {
            const double cx = (static_cast<double>(loose % 3) - 1.0) * 0.35;
            const double cy = static_cast<double>(loose / 3) * 0.35;
            o.pos = {cx + rng.uniform(-0.05, 0.05), cy + rng.uniform(-0.05, 0.05),
                     p.half.z * o.scale + rng.uniform(0.0, 0.03)};
            ++loose;
        }
        out.push_back(std::move(o));
    }
    return out;
}

/// Support and adjacency heuristics over perceived geometry. A small object
/// whose centre lies over a surface footprint (0.35 m margin) and whose
/// bottom is not below that top face is 'On' it; the lowest such surface
/// wins. Large objects closer than 1.5 m are 'Adjacent'; a chair near a
/// desk or table is 'Facing' it.
inline std::vector<RelationEdge> estimate_relations(const std::vector<pipeline::PerceivedObject>& objs) {
    std::vector<RelationEdge> out;
    auto entry_of = [](const pipeline::PerceivedObject& o) { return find_entry(o.category); };
    for (std::size_t i = 0; i < objs.size(); ++i) {
        const auto* ei = entry_of(objs[i]);
        if (!ei || !ei->small) continue;
        const double bottom = objs[i].pos.z - objs[i].halfExtents.z * objs[i].scale;
        std::optional<std::size_t> best;
        double bestGap = 0.0;
        for (std::size_t j = 0; j < objs.size(); ++j) {
            const auto* ej = entry_of(objs[j]);
            if (j == i || !ej || !ej->surface) continue;
            const Vec3 hh = objs[j].halfExtents * objs[j].scale;
            const Vec2 local = rotate2(objs[i].pos.xy() - objs[j].pos.xy(), -objs[j].yaw);
            if (std::abs(local.x) > hh.x + 0.35 || std::abs(local.y) > hh.y + 0.35) continue;
            const double gap = bottom - (objs[j].pos.z + hh.z);
            if (gap < -0.05) continue;
            if (!best || gap < bestGap) {
                best = j;
                bestGap = gap;
            }
        }
        if (best) out.push_back({static_cast<Nid>(*best), static_cast<Nid>(i), Relation::on()});
    }
    for (std::size_t i = 0; i < objs.size(); ++i) {
        const auto* ei = entry_of(objs[i]);
        if (ei && ei->small) continue;
        for (std::size_t j = i + 1; j < objs.size(); ++j) {
            const auto* ej = entry_of(objs[j]);
            if (ej && ej->small) continue;
            if (norm(objs[i].pos.xy() - objs[j].pos.xy()) >= 1.5) continue;
            out.push_back({static_cast<Nid>(i), static_cast<Nid>(j), Relation::adjacent()});
            const bool iChair = objs[i].category == "chair";
            const bool jChair = objs[j].category == "chair";
            auto isWork = [](const std::string& c) { return c == "desk" || c == "table"; };
            if (iChair && isWork(objs[j].category))
                out.push_back({static_cast<Nid>(j), static_cast<Nid>(i), Relation::facing()});
            else if (jChair && isWork(objs[i].category))
                out.push_back({static_cast<Nid>(i), static_cast<Nid>(j), Relation::facing()});
        }
    }
    return out;
}

/// Deterministic stand-in for the perception and generation stack.
inline pipeline::BackendAdapters procedural_backend(std::uint64_t seed) {
    pipeline::BackendAdapters a;
    a.description = "procedural:" + std::to_string(seed);
    a.objectLister = [](const std::string& text, const std::string&, const pipeline::StepContext&) {
        return list_objects(text);
    };
    a.scenePrompter = [](const std::vector<pipeline::ObjectSpec>& objs, const std::string&,
                         const pipeline::StepContext&) { return describe_objects(objs); };
    a.imageGenerator = [seed](const std::string& prompt, const pipeline::StepContext& ctx) {
        return image_handle(prompt, mix_seed(seed, ctx.seed));
    };
    a.reconstructor = [seed](const std::string& handle, const std::vector<pipeline::ObjectSpec>& specs,
                             const pipeline::StepContext& ctx) {
        pipeline::StepContext c = ctx;
        c.seed = mix_seed(seed, ctx.seed);
        return reconstruct(handle, specs, c);
    };
    a.relationEstimator = [](const std::string&, const std::vector<pipeline::PerceivedObject>& objs,
                             const pipeline::StepContext&) { return estimate_relations(objs); };
    return a;
}

}  // namespace higs::procedural
