"""Regenerate the bundled demo CSVs. Seeded; output is deterministic."""
import csv
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "src" / "factsheet" / "data"

def car_sales(rng):
    brands = ["Toyota", "Ford", "Honda", "BMW", "Tesla", "Hyundai", "Volkswagen",
              "Nissan", "Kia", "Subaru", "Mazda"]
    types = ["Sedan", "SUV", "Hatchback", "Truck", "Coupe"]
    rows = []
    for _ in range(275):
        brand = rng.choice(brands)
        typ = rng.choice(types)
        year = rng.randint(2015, 2023)
        base = 120 + brands.index(brand) * 40 + types.index(typ) * 25
        sale = base + rng.randint(-90, 400) + (year - 2015) * rng.randint(0, 30)
        rows.append([brand, typ, max(12, sale), year])
    return ["Brand", "Type", "Sale", "Year"], rows

def movies(rng):
    studios = ["Fox", "Warner Bros", "Universal", "Paramount", "Sony", "Disney",
               "Lionsgate", "MGM"]
    genres = ["Drama", "Comedy", "Action", "Horror", "Animation", "Thriller",
              "Romance", "Documentary"]
    adjectives = ["Silent", "Crimson", "Golden", "Broken", "Midnight", "Electric",
                  "Hidden", "Final", "Lost", "Burning", "Frozen", "Distant"]
    nouns = ["Horizon", "Empire", "Whisper", "Voyage", "Garden", "Mirror",
             "Storm", "Harbor", "Kingdom", "Echo", "Summit", "Tide"]
    rows = []
    used = set()
    while len(rows) < 198:
        title = f"The {rng.choice(adjectives)} {rng.choice(nouns)}"
        if title in used:
            title = f"{title} {rng.randint(2, 4)}"
            if title in used:
                continue
        used.add(title)
        studio = rng.choice(studios)
        genre = rng.choice(genres)
        year = rng.randint(1995, 2023)
        domestic = round(rng.uniform(1.5, 480.0), 1)
        overseas = round(domestic * rng.uniform(0.3, 2.6), 1)
        worldwide = round(domestic + overseas, 1)
        rows.append([title, studio, genre, worldwide, domestic, overseas, year])
    return (["Movie", "Studio", "Type", "Worldwide $m", "Domestic $m",
             "Overseas $m", "Year"], rows)

def write(name, header, rows):
    with open(OUT / name, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    print(name, len(rows), "rows")

if __name__ == "__main__":
    write("CarSales.csv", *car_sales(random.Random("carsales-v1")))
    write("Movies.csv", *movies(random.Random("movies-v1")))
