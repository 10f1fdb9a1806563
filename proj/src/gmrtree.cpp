#include "geomm/gmrtree.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "binio.hpp"

namespace geomm {

Signature Signature::zeros(std::uint32_t bits) {
  Signature s;
  s.bit_length = bits;
  s.words.assign((bits + 63) / 64, 0);
  return s;
}

void Signature::set(std::uint32_t i) { words[i / 64] |= 1ULL << (i % 64); }

bool Signature::test(std::uint32_t i) const {
  return (words[i / 64] >> (i % 64)) & 1ULL;
}

Signature& Signature::operator|=(const Signature& other) {
  if (bit_length != other.bit_length)
    throw std::invalid_argument("signature OR: length mismatch");
  for (std::size_t w = 0; w < words.size(); ++w) words[w] |= other.words[w];
  return *this;
}

bool Signature::none() const {
  for (std::uint64_t w : words)
    if (w) return false;
  return true;
}

Signature object_signature(const SemanticVector& sv, std::uint32_t ell,
                           double tau) {
  if (ell < 1) throw std::invalid_argument("object_signature: ell must be >= 1");
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("object_signature: tau must lie in (0, 1)");
  Signature s = Signature::zeros(ell);
  const bool fold = sv.size() > ell;
  for (std::size_t i = 0; i < sv.size(); ++i)
    if (sv[i] >= tau)
      s.set(fold ? static_cast<std::uint32_t>(i % ell)
                 : static_cast<std::uint32_t>(i));
  return s;
}

Signature superimpose(std::span<const Signature> sigs, std::uint32_t ell) {
  Signature out = Signature::zeros(ell);
  for (const auto& s : sigs) out |= s;
  return out;
}

bool signature_matches(const Signature& query, const Signature& node) {
  if (query.bit_length != node.bit_length)
    throw std::invalid_argument("signature_matches: length mismatch");
  for (std::size_t w = 0; w < query.words.size(); ++w)
    if ((query.words[w] & node.words[w]) != query.words[w]) return false;
  return true;
}

double default_signature_threshold(std::size_t class_count) {
  if (class_count < 2)
    throw std::invalid_argument("signature threshold: need >= 2 classes");
  return std::min(2.0 / static_cast<double>(class_count), 0.5);
}

void GmrTreeParams::validate() const {
  if (fanout_max < 2)
    throw std::invalid_argument("tree params: fanout_max must be >= 2");
  if (fanout_min < 1 || fanout_min > fanout_max / 2)
    throw std::invalid_argument("tree params: need 1 <= fanout_min <= fanout_max/2");
  if (sig_length < 1) throw std::invalid_argument("tree params: sig_length >= 1");
  if (!(sig_threshold > 0.0 && sig_threshold < 1.0))
    throw std::invalid_argument("tree params: sig_threshold in (0, 1)");
}

GmrTree::GmrTree(GmrTreeParams params) : params_(params) { params_.validate(); }

Mbr GmrTree::root_box() const {
  if (!root_) throw std::runtime_error("root_box: tree is empty");
  Mbr box = root_->entries.front().box;
  for (const auto& e : root_->entries) box = mbr_union(box, e.box);
  return box;
}

const GeoMultimediaObject* GmrTree::find_object(std::int64_t id) const {
  auto it = objects_.find(id);
  return it == objects_.end() ? nullptr : &it->second;
}

std::unique_ptr<GmrNode> GmrTree::make_node(int level) {
  auto node = std::make_unique<GmrNode>();
  node->level = level;
  node->node_id = next_node_id_++;
  return node;
}

GmrEntry GmrTree::make_object_entry(const GeoMultimediaObject& obj) const {
  GmrEntry e;
  e.box = point_mbr(obj.location);
  e.sig = object_signature(*obj.semantic, params_.sig_length, params_.sig_threshold);
  e.object_id = obj.id;
  return e;
}

void GmrTree::refresh_entry(GmrEntry& parent_entry) {
  const GmrNode& child = *parent_entry.child;
  parent_entry.box = child.entries.front().box;
  parent_entry.sig = child.entries.front().sig;
  for (std::size_t i = 1; i < child.entries.size(); ++i) {
    parent_entry.box = mbr_union(parent_entry.box, child.entries[i].box);
    parent_entry.sig |= child.entries[i].sig;
  }
}

namespace {

double enlargement(const Mbr& box, const Mbr& add) {
  return mbr_union(box, add).area() - box.area();
}

}  // namespace

GmrEntry* GmrTree::choose_subtree(GmrNode& node, const Mbr& box) {
  GmrEntry* best = nullptr;
  double best_enl = 0.0, best_area = 0.0;
  std::size_t best_count = 0;
  for (auto& e : node.entries) {
    const double enl = enlargement(e.box, box);
    const double area = e.box.area();
    const std::size_t count = e.child->entries.size();
    const bool better =
        !best || enl < best_enl ||
        (enl == best_enl &&
         (area < best_area || (area == best_area && count < best_count)));
    if (better) {
      best = &e;
      best_enl = enl;
      best_area = area;
      best_count = count;
    }
  }
  return best;
}

std::unique_ptr<GmrNode> GmrTree::split_node(GmrNode& node) {
  std::vector<GmrEntry> all = std::move(node.entries);
  node.entries.clear();
  auto sibling = make_node(node.level);

  // Guttman quadratic PickSeeds: the pair wasting the most area apart.
  std::size_t seed_a = 0, seed_b = 1;
  double worst = -1.0;
  for (std::size_t i = 0; i + 1 < all.size(); ++i) {
    for (std::size_t j = i + 1; j < all.size(); ++j) {
      const double waste = mbr_union(all[i].box, all[j].box).area() -
                           all[i].box.area() - all[j].box.area();
      if (waste > worst) {
        worst = waste;
        seed_a = i;
        seed_b = j;
      }
    }
  }

  std::vector<GmrEntry> pool;
  pool.reserve(all.size());
  Mbr box_a = all[seed_a].box, box_b = all[seed_b].box;
  node.entries.push_back(std::move(all[seed_a]));
  sibling->entries.push_back(std::move(all[seed_b]));
  for (std::size_t i = 0; i < all.size(); ++i)
    if (i != seed_a && i != seed_b) pool.push_back(std::move(all[i]));

  const std::size_t m = params_.fanout_min;
  while (!pool.empty()) {
    // Force-assign when one group must take everything left to reach m.
    if (node.entries.size() + pool.size() == m) {
      for (auto& e : pool) {
        box_a = mbr_union(box_a, e.box);
        node.entries.push_back(std::move(e));
      }
      break;
    }
    if (sibling->entries.size() + pool.size() == m) {
      for (auto& e : pool) {
        box_b = mbr_union(box_b, e.box);
        sibling->entries.push_back(std::move(e));
      }
      break;
    }

    // PickNext: the entry with the strongest group preference.
    std::size_t pick = 0;
    double best_diff = -1.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const double d1 = enlargement(box_a, pool[i].box);
      const double d2 = enlargement(box_b, pool[i].box);
      const double diff = std::abs(d1 - d2);
      if (diff > best_diff) {
        best_diff = diff;
        pick = i;
      }
    }
    GmrEntry e = std::move(pool[pick]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));

    const double d1 = enlargement(box_a, e.box);
    const double d2 = enlargement(box_b, e.box);
    bool to_a;
    if (d1 != d2) {
      to_a = d1 < d2;
    } else if (box_a.area() != box_b.area()) {
      to_a = box_a.area() < box_b.area();
    } else {
      to_a = node.entries.size() <= sibling->entries.size();
    }
    if (to_a) {
      box_a = mbr_union(box_a, e.box);
      node.entries.push_back(std::move(e));
    } else {
      box_b = mbr_union(box_b, e.box);
      sibling->entries.push_back(std::move(e));
    }
  }
  return sibling;
}

void GmrTree::insert_entry(GmrEntry entry, int target_level) {
  struct Rec {
    GmrTree& tree;
    int target_level;

    std::unique_ptr<GmrNode> operator()(GmrNode& node, GmrEntry& entry) {
      if (node.level == target_level) {
        node.entries.push_back(std::move(entry));
      } else {
        GmrEntry* slot = tree.choose_subtree(node, entry.box);
        slot->box = mbr_union(slot->box, entry.box);
        slot->sig |= entry.sig;
        auto split_child = (*this)(*slot->child, entry);
        if (split_child) {
          refresh_entry(*slot);  // the child lost entries to its sibling
          GmrEntry sibling_entry;
          sibling_entry.child = std::move(split_child);
          refresh_entry(sibling_entry);
          node.entries.push_back(std::move(sibling_entry));
        }
      }
      if (node.entries.size() > tree.params_.fanout_max)
        return tree.split_node(node);
      return nullptr;
    }
  };

  auto split_root = Rec{*this, target_level}(*root_, entry);
  if (split_root) {
    auto old_root = std::move(root_);
    root_ = make_node(old_root->level + 1);
    GmrEntry a, b;
    a.child = std::move(old_root);
    b.child = std::move(split_root);
    refresh_entry(a);
    refresh_entry(b);
    root_->entries.push_back(std::move(a));
    root_->entries.push_back(std::move(b));
  }
}

void GmrTree::insert(const GeoMultimediaObject& obj) {
  if (!obj.semantic)
    throw std::invalid_argument("insert: object " + std::to_string(obj.id) +
                                " has no semantic vector");
  if (objects_.count(obj.id))
    throw std::invalid_argument("insert: duplicate object id " +
                                std::to_string(obj.id));
  objects_.emplace(obj.id, obj);
  GmrEntry entry = make_object_entry(obj);
  if (!root_) {
    root_ = make_node(0);
    root_->entries.push_back(std::move(entry));
    return;
  }
  insert_entry(std::move(entry), 0);
}

namespace {

// Chunk a run of n entries into node-sized groups, borrowing from the
// second-to-last chunk so no group falls below the minimum fanout.
std::vector<std::size_t> chunk_sizes(std::size_t n, std::size_t fanout_max,
                                     std::size_t fanout_min) {
  std::vector<std::size_t> sizes;
  if (n <= fanout_max) {
    sizes.push_back(n);
    return sizes;
  }
  const std::size_t full = n / fanout_max;
  const std::size_t rem = n % fanout_max;
  sizes.assign(full, fanout_max);
  if (rem > 0) {
    if (rem >= fanout_min) {
      sizes.push_back(rem);
    } else {
      sizes.back() -= fanout_min - rem;
      sizes.push_back(fanout_min);
    }
  }
  return sizes;
}

struct EntryKey {
  double cx, cy;
  std::int64_t id;
  bool operator<(const EntryKey& o) const {
    if (cx != o.cx) return cx < o.cx;
    if (cy != o.cy) return cy < o.cy;
    return id < o.id;
  }
};

EntryKey entry_key(const GmrEntry& e) {
  return {0.5 * (e.box.min.x + e.box.max.x), 0.5 * (e.box.min.y + e.box.max.y),
          e.child ? static_cast<std::int64_t>(e.child->node_id) : e.object_id};
}

bool by_x(const GmrEntry& a, const GmrEntry& b) {
  return entry_key(a) < entry_key(b);
}

bool by_y(const GmrEntry& a, const GmrEntry& b) {
  const EntryKey ka = entry_key(a), kb = entry_key(b);
  if (ka.cy != kb.cy) return ka.cy < kb.cy;
  if (ka.cx != kb.cx) return ka.cx < kb.cx;
  return ka.id < kb.id;
}

}  // namespace

GmrTree GmrTree::bulk_load(const Dataset& ds, GmrTreeParams params) {
  GmrTree tree(params);
  if (ds.objects.empty())
    throw std::invalid_argument("bulk_load: dataset is empty");

  std::vector<GmrEntry> current;
  current.reserve(ds.objects.size());
  for (const auto& obj : ds.objects) {
    if (!obj.semantic)
      throw std::invalid_argument("bulk_load: object " + std::to_string(obj.id) +
                                  " has no semantic vector");
    if (!tree.objects_.emplace(obj.id, obj).second)
      throw std::invalid_argument("bulk_load: duplicate object id " +
                                  std::to_string(obj.id));
    current.push_back(tree.make_object_entry(obj));
  }

  const std::size_t fanout_max = params.fanout_max;
  int next_level = 0;
  while (current.size() > fanout_max) {
    // Sort-tile-recursive packing for this level.
    std::sort(current.begin(), current.end(), by_x);
    const std::size_t n = current.size();
    const std::size_t pages = (n + fanout_max - 1) / fanout_max;
    const std::size_t slices = static_cast<std::size_t>(
        std::ceil(std::sqrt(static_cast<double>(pages))));
    const std::size_t slice_cap = slices * fanout_max;
    for (std::size_t start = 0; start < n; start += slice_cap) {
      const std::size_t stop = std::min(n, start + slice_cap);
      std::sort(current.begin() + static_cast<std::ptrdiff_t>(start),
                current.begin() + static_cast<std::ptrdiff_t>(stop), by_y);
    }

    std::vector<GmrEntry> parents;
    std::size_t pos = 0;
    for (std::size_t size : chunk_sizes(n, fanout_max, params.fanout_min)) {
      auto node = tree.make_node(next_level);
      node->entries.reserve(size);
      for (std::size_t i = 0; i < size; ++i)
        node->entries.push_back(std::move(current[pos++]));
      GmrEntry parent;
      parent.child = std::move(node);
      refresh_entry(parent);
      parents.push_back(std::move(parent));
    }
    current = std::move(parents);
    ++next_level;
  }

  tree.root_ = tree.make_node(next_level);
  tree.root_->entries = std::move(current);
  return tree;
}

namespace {

void audit_node(const GmrNode& node, bool is_root, const GmrTreeParams& params,
                std::unordered_map<std::int64_t, std::size_t>& reached,
                std::vector<std::string>& out) {
  const std::string where =
      "node " + std::to_string(node.node_id) + " (level " +
      std::to_string(node.level) + ")";

  if (is_root) {
    if (node.entries.empty()) out.push_back(where + ": empty root");
    if (!node.is_leaf() && node.entries.size() < 2)
      out.push_back(where + ": internal root with fewer than 2 entries");
    if (node.entries.size() > params.fanout_max)
      out.push_back(where + ": root fanout above maximum");
  } else if (node.entries.size() < params.fanout_min ||
             node.entries.size() > params.fanout_max) {
    out.push_back(where + ": fanout " + std::to_string(node.entries.size()) +
                  " outside [" + std::to_string(params.fanout_min) + ", " +
                  std::to_string(params.fanout_max) + "]");
  }

  for (const auto& e : node.entries) {
    if (e.sig.bit_length != params.sig_length)
      out.push_back(where + ": entry signature length mismatch");
    if (!e.box.valid()) out.push_back(where + ": invalid entry box");

    if (node.is_leaf()) {
      if (e.child || e.object_id < 0) {
        out.push_back(where + ": leaf entry does not reference an object");
        continue;
      }
      ++reached[e.object_id];
    } else {
      if (!e.child) {
        out.push_back(where + ": internal entry has no child node");
        continue;
      }
      if (e.child->level != node.level - 1)
        out.push_back(where + ": child level is not parent level - 1");
      bool box_ok = true, sig_ok = true;
      for (const auto& ce : e.child->entries) {
        box_ok = box_ok && e.box.contains(ce.box);
        sig_ok = sig_ok && ce.sig.bit_length == e.sig.bit_length &&
                 signature_matches(ce.sig, e.sig);
      }
      if (!box_ok)
        out.push_back(where + ": child boxes not contained in entry box");
      if (!sig_ok)
        out.push_back(where + ": child signatures not covered by entry signature");
      audit_node(*e.child, false, params, reached, out);
    }
  }
}

}  // namespace

std::vector<std::string> GmrTree::audit() const {
  std::vector<std::string> out;
  if (!root_) {
    if (!objects_.empty())
      out.push_back("tree has objects but no root node");
    return out;
  }
  std::unordered_map<std::int64_t, std::size_t> reached;
  audit_node(*root_, true, params_, reached, out);
  for (const auto& [id, count] : reached) {
    if (count > 1)
      out.push_back("object " + std::to_string(id) +
                    " reachable from " + std::to_string(count) + " leaf entries");
    if (!objects_.count(id))
      out.push_back("object " + std::to_string(id) +
                    " referenced by a leaf but missing from the object store");
  }
  for (const auto& [id, obj] : objects_)
    if (!reached.count(id))
      out.push_back("object " + std::to_string(id) + " not reachable from any leaf");
  return out;
}

namespace {

constexpr char kTreeMagic[5] = "GMRT";
constexpr std::uint32_t kTreeVersion = 1;

void write_signature(std::ostream& os, const Signature& s) {
  binio::write_u32(os, s.bit_length);
  for (std::uint64_t w : s.words) binio::write_u64(os, w);
}

Signature read_signature(std::istream& is) {
  Signature s = Signature::zeros(binio::read_u32(is));
  for (auto& w : s.words) w = binio::read_u64(is);
  return s;
}

void write_node(std::ostream& os, const GmrNode& node) {
  binio::write_u32(os, static_cast<std::uint32_t>(node.level));
  binio::write_u32(os, static_cast<std::uint32_t>(node.entries.size()));
  for (const auto& e : node.entries) {
    binio::write_f64(os, e.box.min.x);
    binio::write_f64(os, e.box.min.y);
    binio::write_f64(os, e.box.max.x);
    binio::write_f64(os, e.box.max.y);
    write_signature(os, e.sig);
    binio::write_u8(os, e.child ? 1 : 0);
    if (e.child)
      write_node(os, *e.child);
    else
      binio::write_i64(os, e.object_id);
  }
}

}  // namespace

void GmrTree::save(const std::string& path) const {
  auto os = binio::open_out(path);
  os.write(kTreeMagic, 4);
  binio::write_u32(os, kTreeVersion);
  binio::write_u64(os, params_.fanout_min);
  binio::write_u64(os, params_.fanout_max);
  binio::write_u32(os, params_.sig_length);
  binio::write_f64(os, params_.sig_threshold);
  binio::write_u64(os, objects_.size());

  std::vector<const GeoMultimediaObject*> sorted;
  sorted.reserve(objects_.size());
  for (const auto& [id, obj] : objects_) sorted.push_back(&obj);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->id < b->id; });
  for (const auto* obj : sorted) {
    binio::write_i64(os, obj->id);
    binio::write_f64(os, obj->location.x);
    binio::write_f64(os, obj->location.y);
    binio::write_u8(os, static_cast<std::uint8_t>(obj->feature.modality));
    binio::write_f64_array(os, obj->feature.values);
    binio::write_u8(os, obj->semantic ? 1 : 0);
    if (obj->semantic) binio::write_f64_array(os, obj->semantic->probabilities);
    binio::write_u8(os, obj->label ? 1 : 0);
    if (obj->label) binio::write_i64(os, *obj->label);
  }

  binio::write_u8(os, root_ ? 1 : 0);
  if (root_) write_node(os, *root_);
  if (!os) throw std::runtime_error("save: write failed: " + path);
}

namespace {

std::unique_ptr<GmrNode> read_node(std::istream& is, std::uint64_t& next_id) {
  auto node = std::make_unique<GmrNode>();
  node->level = static_cast<int>(binio::read_u32(is));
  node->node_id = next_id++;
  const std::uint32_t count = binio::read_u32(is);
  node->entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    GmrEntry e;
    e.box.min.x = binio::read_f64(is);
    e.box.min.y = binio::read_f64(is);
    e.box.max.x = binio::read_f64(is);
    e.box.max.y = binio::read_f64(is);
    e.sig = read_signature(is);
    if (binio::read_u8(is))
      e.child = read_node(is, next_id);
    else
      e.object_id = binio::read_i64(is);
    node->entries.push_back(std::move(e));
  }
  return node;
}

}  // namespace

GmrTree GmrTree::load(const std::string& path) {
  auto is = binio::open_in(path);
  binio::expect_magic(is, kTreeMagic, "GMR-Tree index");
  const std::uint32_t version = binio::read_u32(is);
  if (version != kTreeVersion)
    throw std::runtime_error("load: unsupported index version " +
                             std::to_string(version));
  GmrTreeParams params;
  params.fanout_min = binio::read_u64(is);
  params.fanout_max = binio::read_u64(is);
  params.sig_length = binio::read_u32(is);
  params.sig_threshold = binio::read_f64(is);
  GmrTree tree(params);

  const std::uint64_t count = binio::read_u64(is);
  tree.objects_.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    GeoMultimediaObject obj;
    obj.id = binio::read_i64(is);
    obj.location.x = binio::read_f64(is);
    obj.location.y = binio::read_f64(is);
    obj.feature.modality = static_cast<Modality>(binio::read_u8(is));
    obj.feature.values = binio::read_f64_array(is);
    if (binio::read_u8(is)) obj.semantic = SemanticVector{binio::read_f64_array(is)};
    if (binio::read_u8(is)) obj.label = static_cast<int>(binio::read_i64(is));
    tree.objects_.emplace(obj.id, std::move(obj));
  }

  if (binio::read_u8(is)) tree.root_ = read_node(is, tree.next_node_id_);
  return tree;
}

}  // namespace geomm
