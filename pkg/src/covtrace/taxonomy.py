"""Two-level infection-source taxonomy.

Five top-level categories fan out into fourteen subcategory leaves. Every
leaf has exactly one parent, so a classified case is always describable as
a (category, subcategory) pair.
"""

from __future__ import annotations

from enum import Enum


class Category(str, Enum):
    """Top-level infection-source category."""

    HUBEI_TRAVEL = "hubei_travel"
    PUBLIC_TRANSIT = "public_transit"
    SOCIAL = "social"
    RELATIVE = "relative"
    UNKNOWN = "unknown"


class SubCategory(str, Enum):
    """Leaf-level infection source."""

    RESTAURANT = "restaurant"
    SUPERMARKET = "supermarket"
    HOSPITAL = "hospital"
    HOTEL = "hotel"
    SHOPPING_MALL = "shopping_mall"
    RESIDENTIAL = "residential"
    NURSING_HOME = "nursing_home"
    PRIVATE_VEHICLE = "private_vehicle"
    TRAIN = "train"
    AIRPORT = "airport"
    BUS = "bus"
    RELATIVE = "relative"
    HUBEI = "hubei"
    UNKNOWN = "unknown"


PARENT: dict[SubCategory, Category] = {
    SubCategory.RESTAURANT: Category.SOCIAL,
    SubCategory.SUPERMARKET: Category.SOCIAL,
    SubCategory.HOSPITAL: Category.SOCIAL,
    SubCategory.HOTEL: Category.SOCIAL,
    SubCategory.SHOPPING_MALL: Category.SOCIAL,
    SubCategory.RESIDENTIAL: Category.SOCIAL,
    SubCategory.NURSING_HOME: Category.SOCIAL,
    SubCategory.PRIVATE_VEHICLE: Category.PUBLIC_TRANSIT,
    SubCategory.TRAIN: Category.PUBLIC_TRANSIT,
    SubCategory.AIRPORT: Category.PUBLIC_TRANSIT,
    SubCategory.BUS: Category.PUBLIC_TRANSIT,
    SubCategory.RELATIVE: Category.RELATIVE,
    SubCategory.HUBEI: Category.HUBEI_TRAVEL,
    SubCategory.UNKNOWN: Category.UNKNOWN,
}

# Canonical leaf order used for table rows, confusion-matrix axes and CSV
# columns: social venues, transit modes, then relative / hubei / unknown.
LEAVES: tuple[SubCategory, ...] = (
    SubCategory.RESTAURANT,
    SubCategory.SUPERMARKET,
    SubCategory.HOSPITAL,
    SubCategory.HOTEL,
    SubCategory.SHOPPING_MALL,
    SubCategory.RESIDENTIAL,
    SubCategory.NURSING_HOME,
    SubCategory.PRIVATE_VEHICLE,
    SubCategory.TRAIN,
    SubCategory.AIRPORT,
    SubCategory.BUS,
    SubCategory.RELATIVE,
    SubCategory.HUBEI,
    SubCategory.UNKNOWN,
)

CATEGORIES: tuple[Category, ...] = (
    Category.HUBEI_TRAVEL,
    Category.PUBLIC_TRANSIT,
    Category.SOCIAL,
    Category.RELATIVE,
    Category.UNKNOWN,
)

# Ties between equally scored leaves resolve in this fixed order.
LEAF_PRIORITY: tuple[SubCategory, ...] = (
    SubCategory.HUBEI,
    SubCategory.RELATIVE,
    SubCategory.PRIVATE_VEHICLE,
    SubCategory.TRAIN,
    SubCategory.AIRPORT,
    SubCategory.BUS,
    SubCategory.RESTAURANT,
    SubCategory.HOSPITAL,
    SubCategory.SUPERMARKET,
    SubCategory.HOTEL,
    SubCategory.SHOPPING_MALL,
    SubCategory.RESIDENTIAL,
    SubCategory.NURSING_HOME,
    SubCategory.UNKNOWN,
)

LEAF_INDEX: dict[SubCategory, int] = {leaf: i for i, leaf in enumerate(LEAVES)}


def parent_of(leaf: SubCategory) -> Category:
    """Return the unique category that owns ``leaf``."""
    return PARENT[leaf]


def children_of(category: Category) -> tuple[SubCategory, ...]:
    """Return the leaves under ``category`` in canonical order."""
    return tuple(leaf for leaf in LEAVES if PARENT[leaf] is category)
