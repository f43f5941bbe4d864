"""Rasterize coarse continent outlines into the bundled 1-degree land mask.

Layout of the output (8100 bytes): 180 rows x 360 columns, row-major,
north to south. Row r covers latitudes (89 - r, 90 - r], column c covers
longitudes [-180 + c, -179 + c). Bits are packed MSB-first; 1 = land.
A cell is land when its centre lies inside an outline.

Usage: python3 scripts/gen_landmask.py crates/core/assets/simulators/landmask.bin
"""
import sys

from shapely.geometry import Point, Polygon
from shapely.ops import unary_union

OUTLINES = {
    "north_america": [
        (-166, 68.5), (-162, 70.5), (-156, 71.3), (-141, 69.7), (-128, 70.2), (-117, 68.5), (-108, 68.5),
        (-95, 68), (-88, 68.5), (-82, 66), (-75, 62), (-65, 60), (-61, 56), (-56, 52), (-60, 47),
        (-66, 44.5), (-70, 43), (-70, 41.7), (-74, 40.5), (-76, 37), (-76, 35), (-81, 31.5), (-80.1, 27),
        (-80.3, 25.2), (-81.7, 25.9), (-82.7, 28), (-84, 30), (-89, 30.2), (-94, 29.5), (-97.2, 27.5),
        (-97.5, 25), (-97.7, 22), (-96, 19), (-94.5, 18.2), (-91, 18.8), (-90.4, 21.1), (-87, 21.5),
        (-88, 18), (-88.3, 16), (-84, 15.8), (-83.3, 11), (-81.5, 9), (-79, 9.5), (-77.3, 8.3), (-78, 7),
        (-80, 7.4), (-85.7, 10), (-87.6, 13), (-91.5, 14), (-94.5, 16), (-96.5, 15.7), (-100, 17),
        (-105.5, 20), (-106, 23), (-109, 26), (-112.7, 31.3), (-117.1, 32.5), (-120.6, 34.6),
        (-122.4, 37.8), (-124.2, 40.4), (-124, 46), (-124.7, 48.4), (-127.5, 50.5), (-130.5, 54.5),
        (-135, 58), (-140, 59.8), (-146, 60.5), (-152, 59), (-158, 56.5), (-164, 54.6), (-158, 58.5),
        (-162, 60), (-165, 62.5), (-164.5, 64), (-168, 65.6),
    ],
    "baffin": [(-80, 73.5), (-68, 70.5), (-61.5, 66.5), (-64.5, 63), (-72, 64), (-78, 64.5), (-73, 67.5),
               (-80, 70), (-88, 70.5)],
    "arctic_archipelago": [(-120, 71.5), (-100, 73), (-90, 76), (-80, 76.5), (-62, 82), (-80, 83), (-95, 81),
                           (-110, 78), (-122, 76), (-125, 73)],
    "greenland": [(-73, 78), (-66, 81), (-45, 82.5), (-25, 83), (-18, 81.5), (-20, 77), (-19, 74), (-22, 70.5),
                  (-26, 68.5), (-34, 66), (-40, 65), (-43, 60), (-46, 60.5), (-50, 63), (-53, 66), (-54, 70),
                  (-57, 74.5), (-66, 76)],
    "iceland": [(-24, 65.5), (-22, 66.4), (-16, 66.5), (-13.5, 65.2), (-15, 64.3), (-18.7, 63.4), (-22.7, 63.8)],
    "cuba": [(-85, 21.8), (-82, 23.2), (-77, 22.5), (-74.2, 20.2), (-77.5, 19.8), (-80, 21.6)],
    "hispaniola": [(-74.5, 18.4), (-72.7, 19.9), (-69.5, 19.7), (-68.3, 18.5), (-71.5, 17.6)],
    "south_america": [
        (-77.5, 8.5), (-75.5, 10.8), (-72, 12.4), (-70, 11.7), (-66, 10.6), (-62, 10.7), (-60, 8.5), (-57, 6),
        (-52, 5), (-50, 1.8), (-48, -1), (-44, -2.5), (-39, -3.5), (-35, -5.5), (-35, -9), (-37.5, -12.5),
        (-39, -15.5), (-40, -20.5), (-42, -23), (-44.5, -23.3), (-48.5, -26), (-48.6, -28.5), (-51, -31.5),
        (-53.5, -34), (-56, -35), (-57.5, -36.5), (-57.5, -38.5), (-62, -39), (-65, -41), (-64, -42.5),
        (-65.5, -45), (-67.5, -46.5), (-66, -48), (-69, -51.5), (-68.5, -53), (-71, -54), (-74.5, -52),
        (-75.5, -47), (-73.5, -42.5), (-73.5, -37), (-71.5, -32), (-71.3, -25), (-70, -18.5), (-76, -14),
        (-78, -10), (-81, -6), (-81, -4), (-80, -2), (-80.5, 0), (-78.5, 2), (-77.5, 4), (-77.3, 6.5),
    ],
    "eurasia": [
        (-9.5, 37), (-9, 43), (-1.5, 43.5), (-4.5, 48.5), (-1, 49.5), (2, 51), (4, 51.5), (8.5, 54), (8, 57),
        (10.5, 57.7), (10.5, 54.5), (12, 54.2), (14, 54), (19, 54.5), (21, 56), (24, 57.5), (28, 60), (23, 60),
        (21.5, 61), (21.5, 63.5), (25, 65.5), (21.5, 65.7), (17.5, 62.5), (17, 61), (18.5, 60), (16, 56.2),
        (12.7, 56), (11, 58.8), (8, 58), (5.5, 58.8), (5, 62), (10, 64), (14.5, 67.8), (19, 70), (25, 71),
        (31, 70), (40, 67.5), (44, 68.5), (54, 68.5), (60, 69.5), (68, 68.5), (73, 72.5), (80, 72.5),
        (87, 75), (100, 76.5), (113, 73.5), (130, 71.5), (140, 72.5), (160, 70), (170, 70), (180, 69),
        (180, 65), (178, 64.5), (177, 62.5), (170, 60), (163, 60), (162, 56), (156.5, 51), (156, 57),
        (160, 61.5), (154, 59.5), (142, 59), (137, 54), (140.5, 52), (141, 48), (135, 43), (129.5, 42),
        (128, 39), (129.5, 35.5), (126.5, 34.5), (126, 37.5), (124.5, 39.8), (121.5, 39), (121, 40.8),
        (118, 39), (119, 37.2), (122.5, 37), (119.5, 35), (120.5, 32), (122, 30), (119.5, 25.5), (116, 22.8),
        (110.5, 21), (109, 21.6), (106, 20), (105.8, 18.5), (109, 15), (109, 11.5), (105, 8.6), (104.5, 10.5),
        (100.5, 13.4), (99.2, 9.5), (100.5, 7), (103.5, 4), (103.5, 1.5), (101.5, 2.5), (98, 8), (98.5, 13),
        (97.5, 16.5), (94.5, 16), (94, 19), (92, 21), (90, 22), (87, 21.5), (86.5, 20), (80.3, 15.5), (80, 10),
        (77.5, 8), (76.3, 9.5), (74.5, 14), (73, 19), (72.5, 21), (70, 22.5), (67, 24.5), (62, 25.2),
        (57, 25.7), (59.8, 22.5), (57.8, 19), (55, 17), (52, 15.5), (48, 14), (45, 13), (43.3, 12.7),
        (42.7, 16), (39, 21.5), (36.8, 25.8), (34.7, 28), (34.5, 29.5), (32.5, 30), (32.3, 31.2),
        (34.5, 31.5), (35.5, 33.5), (36, 36), (32, 36.2), (28, 36.7), (26.5, 38.5), (26, 40.8), (23, 40.3),
        (24, 38), (23, 36.5), (21.5, 37), (19.5, 40), (19.5, 42), (16, 43.5), (13.7, 45.5), (12.3, 44.5),
        (14, 42), (16, 41), (18.5, 40.2), (16.5, 38.5), (15.6, 38), (15.8, 40), (12, 41.8), (10.5, 43),
        (8.8, 44.4), (7, 43.6), (4, 43.5), (3.2, 42), (0.5, 40.5), (-0.3, 39), (-2, 36.7), (-5.5, 36),
        (-6.5, 36.8),
    ],
    "britain": [(-5.7, 50), (1.5, 51), (1.7, 52.8), (0, 53.5), (-1.5, 55), (-2, 56), (-1.8, 57.6), (-3, 58.6),
                (-5, 58.6), (-6.2, 57.5), (-5.6, 56), (-4.8, 54.8), (-3.2, 54), (-3, 53.3), (-4.5, 52.8),
                (-5, 51.7), (-3, 51.4)],
    "ireland": [(-6, 52.2), (-6, 54), (-5.5, 55.2), (-8, 55.2), (-10, 54), (-10.3, 51.8), (-8, 51.5)],
    "africa": [
        (-17, 21), (-16, 24.5), (-13, 27.7), (-9.8, 30), (-6, 35.8), (-2, 35), (3, 36.8), (10, 37.3),
        (11, 35.2), (10, 34), (11.5, 33), (15.5, 32), (19.5, 30.5), (20, 32), (23, 32.6), (25, 31.7),
        (29, 30.9), (32.3, 31.2), (32.6, 29.9), (35, 24), (37.2, 21), (39, 16), (43.2, 12.7), (44, 10.5),
        (51.2, 11.8), (51, 10.4), (48, 4.5), (41.5, -1.5), (39.5, -5), (40, -10.5), (40.5, -15), (35, -20),
        (35.5, -24), (32.8, -26), (32.5, -29), (27.5, -33.5), (22, -34), (18.5, -34.2), (17.9, -31.5),
        (15, -27), (11.8, -17.3), (13.5, -11.5), (12.2, -6), (9, -1), (9.5, 4), (6, 4.3), (3, 6.3),
        (-1.5, 5), (-4.5, 5.2), (-7.5, 4.4), (-11, 6.8), (-13.3, 9), (-15, 11), (-17.2, 14.7), (-16, 18),
    ],
    "madagascar": [(49.3, -12), (50.5, -15.5), (49.5, -17.5), (47.5, -24.8), (45, -25.5), (43.5, -22),
                   (44.5, -16.2), (47, -15)],
    "sri_lanka": [(79.8, 6), (80, 9.8), (81.9, 7.5), (81.3, 6.2)],
    "taiwan": [(120.1, 23), (121, 25.3), (122, 25), (121, 22)],
    "honshu": [(130.9, 34), (132.5, 35.5), (136, 36.5), (137.5, 37.2), (140, 40.5), (141.5, 41.4), (142, 39),
               (141, 36), (139.8, 35), (137, 34.5), (135, 33.7), (132, 33.8)],
    "hokkaido": [(140, 41.5), (141.5, 45.4), (145.5, 43.5), (143.5, 42)],
    "kyushu": [(129.8, 33.5), (131.5, 33.5), (131.5, 31.5), (130.2, 31.2)],
    "sakhalin": [(142, 46), (143.5, 49), (143, 54.3), (142, 54)],
    "luzon": [(120, 18.5), (122.5, 18.5), (122, 16), (124, 13), (120.5, 13.8), (120, 16)],
    "mindanao": [(122, 8), (126.5, 7), (126, 9.5), (125.5, 9.8), (123.5, 8.5)],
    "borneo": [(109, 1.5), (110, -1.5), (113, -3.2), (116.5, -3.5), (117.5, 1), (119, 5), (117, 7), (115, 5),
               (111, 2)],
    "sumatra": [(95.3, 5.5), (97.5, 5.2), (100.5, 2), (104, -1), (106, -3), (106, -5.8), (104.5, -5.9),
                (102, -4), (100, -1), (98.5, 1.8)],
    "java": [(105.2, -6.8), (106, -6), (111, -6.4), (114.5, -7.8), (114.3, -8.7), (110, -8.2), (105.5, -7)],
    "sulawesi": [(119.5, -5.5), (120.5, -2), (119, -0.5), (120, 1), (124.5, 1.2), (121, -1), (123, -4.5),
                 (121, -4.7), (120.5, -5.5)],
    "new_guinea": [(131, -1.3), (134, -0.8), (138, -1.5), (141, -2.6), (145, -4.3), (147.5, -6), (150.5, -10.5),
                   (147, -10.2), (146, -8), (143.5, -9), (141, -9.2), (138.5, -8.3), (137.8, -5.3), (134.5, -4),
                   (132, -3.5)],
    "australia": [(114, -22), (113.5, -26), (115, -30), (115, -34), (118, -35), (123, -34), (126, -32.3),
                  (131, -31.5), (134, -32.5), (136, -35), (138, -35.5), (140, -38), (144, -38.3), (146.5, -39),
                  (150, -37.5), (151, -34), (153, -31), (153.5, -28), (153, -25), (150.5, -22.5), (149, -20.5),
                  (146, -18.5), (145.3, -15), (143.5, -14), (142.5, -10.8), (141.5, -13), (141.5, -17),
                  (139.5, -17.5), (136, -15.5), (137, -12), (132.5, -11.3), (130, -13), (129, -15), (126, -14),
                  (123.5, -17), (122, -18.5), (120, -20), (117, -20.7)],
    "tasmania": [(144.6, -40.7), (148.3, -40.9), (148, -43.2), (146, -43.6), (144.6, -41.5)],
    "new_zealand_north": [(172.6, -34.4), (174.5, -36.8), (178.5, -37.7), (177, -39.5), (175, -41.5),
                          (174.6, -39.6), (173.8, -39.2)],
    "new_zealand_south": [(172.7, -40.5), (174.3, -41.7), (173, -43.6), (171, -45), (169, -46.7), (166.5, -46),
                          (168.3, -44)],
    "antarctica": [(-180, -90), (180, -90), (180, -70), (150, -68), (120, -66.5), (90, -66.5), (60, -67),
                   (30, -69.5), (0, -70), (-30, -76), (-60, -73), (-62, -64), (-58, -63), (-65, -68),
                   (-75, -72), (-100, -73), (-130, -75), (-160, -78), (-180, -77)],
}

INLAND_WATER = {
    "hudson_bay": [(-94, 59), (-93, 61), (-87, 64), (-81, 63), (-78, 62.5), (-77, 60), (-77, 56), (-79, 54.5),
                   (-82, 52.8), (-87, 55.5), (-92.5, 57)],
    "caspian": [(47, 45.5), (51, 47), (53, 45.5), (51.3, 43), (53, 41), (54, 37.3), (50.3, 37.3), (49, 38.5),
                (49.5, 40.5), (47.5, 42.5)],
    "black_sea": [(28.2, 41.5), (27.8, 43), (29.7, 45.3), (32.5, 46), (36, 45.2), (38, 44.5), (40, 43),
                  (41.5, 41.5), (36, 41.7), (31, 41.1)],
}


def main(path):
    land = unary_union([Polygon(p).buffer(0) for p in OUTLINES.values()])
    water = unary_union([Polygon(p).buffer(0) for p in INLAND_WATER.values()])
    land = land.difference(water)
    bits = bytearray(180 * 360 // 8)
    for r in range(180):
        lat = 89.5 - r
        for c in range(360):
            lon = -179.5 + c
            if land.contains(Point(lon, lat)):
                idx = r * 360 + c
                bits[idx // 8] |= 0x80 >> (idx % 8)
    with open(path, "wb") as f:
        f.write(bits)
    n = sum(bin(b).count("1") for b in bits)
    print(f"wrote {path}: {n} land cells of {180 * 360}")


if __name__ == "__main__":
    main(sys.argv[1])
